#include "crisp/harness.hpp"

#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace crisp::harness {

namespace fs = std::filesystem;
using approx::Matrix;
using approx::ParamVector;
using hierarchy::Variant;
using nlohmann::json;
using regularize::RegKind;
using relabel::ParserKind;
using rl::Level;

// ---------------------------------------------------------------------------
// RunConfig
// ---------------------------------------------------------------------------

namespace {

struct KvFile {
  std::map<std::string, std::string> kv;
  std::vector<std::string> order;

  void set(const std::string& k, const std::string& v) {
    if (!kv.count(k)) order.push_back(k);
    kv[k] = v;
  }
  static KvFile parse(const std::string& text) {
    KvFile f;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
      };
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      require(eq != std::string::npos, Errc::config,
              "config line " + std::to_string(lineno) + ": expected key = value");
      f.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return f;
  }
};

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(Errc::config, "config key " + key + ": expected boolean, got '" + v + "'");
}

// env.* values go into the factory's JSON; integers stay integers.
json parse_scalar(const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  try {
    std::size_t pos = 0;
    const long long i = std::stoll(v, &pos);
    if (pos == v.size()) return i;
  } catch (...) {
  }
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos == v.size()) return d;
  } catch (...) {
  }
  return v;
}

}  // namespace

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), Errc::io, "config: cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return from_string(ss.str());
}

RunConfig RunConfig::from_string(const std::string& text) {
  KvFile f = KvFile::parse(text);
  RunConfig c;
  json env_params = json::object();

  for (const std::string& key : f.order) {
    const std::string& v = f.kv[key];
    if (key.rfind("env.", 0) == 0) {
      env_params[key.substr(4)] = parse_scalar(v);
    } else if (key == "env") {
      c.env = v;
    } else if (key == "T") {
      c.T = std::stoi(v);
    } else if (key == "c") {
      c.c = std::stoi(v);
    } else if (key == "delta_lo") {
      c.delta_lo = std::stod(v);
    } else if (key == "delta_hi") {
      c.delta_hi = std::stod(v);
    } else if (key == "variant") {
      c.variant = hierarchy::variant_from_string(v);
    } else if (key == "higher_policy") {
      if (v == "identity") c.higher_identity = true;
      else if (v == "learned") c.higher_identity = false;
      else throw Error(Errc::config, "higher_policy must be learned or identity");
    } else if (key == "regularizer") {
      c.reg.kind = regularize::reg_from_string(v);
    } else if (key == "psi") {
      c.reg.psi = std::stod(v);
    } else if (key == "reg.conditioned") {
      c.reg.conditioned_hi = parse_bool(v, key);
    } else if (key == "reg.lower_level") {
      c.reg.lower_level = parse_bool(v, key);
    } else if (key == "reg.lower_pairs") {
      if (v == "verified") c.reg.lower_pairs_verified_only = true;
      else if (v == "all") c.reg.lower_pairs_verified_only = false;
      else throw Error(Errc::config, "reg.lower_pairs must be verified or all");
    } else if (key == "reg.disc_lr") {
      c.reg.disc_lr = std::stod(v);
    } else if (key == "reg.batch") {
      c.reg.batch = std::stoi(v);
    } else if (key == "parser") {
      c.parser = relabel::parser_from_string(v);
    } else if (key == "window_k") {
      c.window_k = std::stoi(v);
    } else if (key == "population_period") {
      c.population_period = std::stol(v);
    } else if (key == "total_steps") {
      c.total_steps = std::stol(v);
    } else if (key == "stop_at") {
      c.stop_at = std::stol(v);
    } else if (key == "demos") {
      c.demo_path = v;
    } else if (key == "demo_limit") {
      c.demo_limit = std::stoi(v);
    } else if (key == "seed") {
      c.seed = std::stoull(v);
    } else if (key == "eval_every") {
      c.eval_every = std::stol(v);
    } else if (key == "eval_rollouts") {
      c.eval_rollouts = std::stoi(v);
    } else if (key == "eval_seed_base") {
      c.eval_seed_base = std::stoull(v);
    } else if (key == "checkpoint_every") {
      c.checkpoint_every = std::stol(v);
    } else if (key == "out") {
      c.out_dir = v;
    } else if (key == "save_dg_snapshots") {
      c.save_dg_snapshots = parse_bool(v, key);
    } else if (key == "save_eval_episodes") {
      c.save_eval_episodes = parse_bool(v, key);
    } else if (key == "sac.gamma") {
      c.sac.gamma = std::stod(v);
    } else if (key == "sac.tau") {
      c.sac.tau = std::stod(v);
    } else if (key == "sac.alpha") {
      c.sac.alpha = std::stod(v);
    } else if (key == "sac.alpha_hi") {
      c.alpha_hi = std::stod(v);
    } else if (key == "sac.lr") {
      c.sac.lr = std::stod(v);
    } else if (key == "sac.batch") {
      c.sac.batch = std::stoi(v);
    } else if (key == "sac.hidden") {
      c.sac.hidden.clear();
      std::stringstream hs(v);
      std::string tok;
      while (std::getline(hs, tok, ',')) c.sac.hidden.push_back(std::stoi(tok));
    } else if (key == "sac.capacity") {
      c.capacity = std::stol(v);
    } else if (key == "sac.warmup") {
      c.warmup = std::stol(v);
    } else if (key == "sac.update_every") {
      c.update_every = std::stoi(v);
    } else if (key == "sac.higher_update_every") {
      c.higher_update_every = std::stoi(v);
    } else if (key == "higher_gamma_mode") {
      c.higher_gamma_mode = v;
    } else if (key == "nan_abort_after") {
      c.nan_abort_after = std::stoi(v);
    } else {
      throw Error(Errc::config, "config: unknown key '" + key + "'");
    }
  }
  c.env_params_json = env_params.dump();
  return c;
}

std::string RunConfig::to_string() const {
  std::ostringstream os;
  os << "env = " << env << "\n";
  json ep = json::parse(env_params_json);
  for (auto& [k, v] : ep.items())
    os << "env." << k << " = " << (v.is_string() ? v.get<std::string>() : v.dump()) << "\n";
  os << "T = " << T << "\n";
  os << "c = " << c << "\n";
  char buf[64];
  auto put_d = [&](const char* k, double x) {
    std::snprintf(buf, sizeof buf, "%.17g", x);
    os << k << " = " << buf << "\n";
  };
  put_d("delta_lo", delta_lo);
  put_d("delta_hi", delta_hi);
  os << "variant = " << hierarchy::variant_to_string(variant) << "\n";
  os << "higher_policy = " << (higher_identity ? "identity" : "learned") << "\n";
  os << "regularizer = " << regularize::reg_to_string(reg.kind) << "\n";
  put_d("psi", reg.psi);
  os << "reg.conditioned = " << (reg.conditioned_hi ? "true" : "false") << "\n";
  os << "reg.lower_level = " << (reg.lower_level ? "true" : "false") << "\n";
  os << "reg.lower_pairs = " << (reg.lower_pairs_verified_only ? "verified" : "all") << "\n";
  put_d("reg.disc_lr", reg.disc_lr);
  os << "reg.batch = " << reg.batch << "\n";
  os << "parser = " << relabel::parser_to_string(parser) << "\n";
  os << "window_k = " << window_k << "\n";
  os << "population_period = " << population_period << "\n";
  os << "total_steps = " << total_steps << "\n";
  os << "stop_at = " << stop_at << "\n";
  if (!demo_path.empty()) os << "demos = " << demo_path << "\n";
  os << "demo_limit = " << demo_limit << "\n";
  os << "seed = " << seed << "\n";
  os << "eval_every = " << eval_every << "\n";
  os << "eval_rollouts = " << eval_rollouts << "\n";
  os << "eval_seed_base = " << eval_seed_base << "\n";
  os << "checkpoint_every = " << checkpoint_every << "\n";
  if (!out_dir.empty()) os << "out = " << out_dir << "\n";
  os << "save_dg_snapshots = " << (save_dg_snapshots ? "true" : "false") << "\n";
  os << "save_eval_episodes = " << (save_eval_episodes ? "true" : "false") << "\n";
  put_d("sac.gamma", sac.gamma);
  put_d("sac.tau", sac.tau);
  put_d("sac.alpha", sac.alpha);
  put_d("sac.alpha_hi", alpha_hi);
  put_d("sac.lr", sac.lr);
  os << "sac.batch = " << sac.batch << "\n";
  os << "sac.hidden = ";
  for (std::size_t i = 0; i < sac.hidden.size(); ++i)
    os << (i ? "," : "") << sac.hidden[i];
  os << "\n";
  os << "sac.capacity = " << capacity << "\n";
  os << "sac.warmup = " << warmup << "\n";
  os << "sac.update_every = " << update_every << "\n";
  os << "sac.higher_update_every = " << higher_update_every << "\n";
  os << "higher_gamma_mode = " << higher_gamma_mode << "\n";
  os << "nan_abort_after = " << nan_abort_after << "\n";
  return os.str();
}

void RunConfig::validate() const {
  require(T >= 1 && c >= 1 && c <= T, Errc::config, "config: need 1 <= c <= T");
  require(total_steps > 0, Errc::config, "config: total_steps must be positive");
  require(parser == ParserKind::none || population_period > 0, Errc::config,
          "config: population_period must be > 0 when a parser is active");
  require(parser == ParserKind::none || !demo_path.empty(), Errc::config,
          "config: parser requires a demo dataset (demos = ...)");
  if (!demo_path.empty())
    require(fs::exists(demo_path), Errc::config, "config: demo path does not exist: " + demo_path);
  require(eval_every > 0 && eval_rollouts >= 1, Errc::config, "config: bad eval settings");
  require(update_every >= 1, Errc::config, "config: update_every must be >= 1");
  require(higher_gamma_mode == "per_decision" || higher_gamma_mode == "c_power", Errc::config,
          "config: higher_gamma_mode must be per_decision or c_power");
  if (variant != Variant::crisp)
    require(parser == ParserKind::none && reg.kind == RegKind::none, Errc::config,
            "config: parser/regularizer require variant = crisp");
  if (variant == Variant::flat)
    require(!higher_identity, Errc::config, "config: higher_policy applies to hierarchical runs");
}

// ---------------------------------------------------------------------------
// Metrics CSV
// ---------------------------------------------------------------------------

const char* kMetricsHeader =
    "step,relabel_steps,loss_lo_critic,loss_lo_actor,loss_hi_critic,loss_hi_actor,"
    "loss_disc_lo,loss_disc_hi,loss_reg_lo,loss_reg_hi,success,dg_size,subgoals_per_demo";

std::string metrics_to_csv(const std::vector<MetricsRow>& rows) {
  std::ostringstream os;
  os << kMetricsHeader << "\n";
  char buf[512];
  for (const MetricsRow& r : rows) {
    std::snprintf(buf, sizeof buf,
                  "%ld,%ld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%ld,%.17g\n",
                  r.step, r.relabel_steps, r.loss_lo_critic, r.loss_lo_actor, r.loss_hi_critic,
                  r.loss_hi_actor, r.loss_disc_lo, r.loss_disc_hi, r.loss_reg_lo, r.loss_reg_hi,
                  r.success, r.dg_size, r.subgoals_per_demo);
    os << buf;
  }
  return os.str();
}

std::vector<MetricsRow> metrics_from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  require(static_cast<bool>(std::getline(is, line)), Errc::io, "metrics: empty csv");
  require(line == kMetricsHeader, Errc::io, "metrics: unexpected header");
  std::vector<MetricsRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    MetricsRow r;
    const int n = std::sscanf(
        line.c_str(), "%ld,%ld,%lg,%lg,%lg,%lg,%lg,%lg,%lg,%lg,%lg,%ld,%lg", &r.step,
        &r.relabel_steps, &r.loss_lo_critic, &r.loss_lo_actor, &r.loss_hi_critic,
        &r.loss_hi_actor, &r.loss_disc_lo, &r.loss_disc_hi, &r.loss_reg_lo, &r.loss_reg_hi,
        &r.success, &r.dg_size, &r.subgoals_per_demo);
    require(n == 13, Errc::io, "metrics: malformed row: " + line);
    rows.push_back(r);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Binary checkpoint io
// ---------------------------------------------------------------------------

namespace {

constexpr std::uint64_t kCkptMagic = 0x31504b4350535243ull;  // "CRSPCKP1"

struct Writer {
  std::ofstream f;
  explicit Writer(const std::string& path) : f(path, std::ios::binary) {
    require(f.good(), Errc::io, "checkpoint: cannot open " + path);
  }
  void u64(std::uint64_t x) { f.write(reinterpret_cast<const char*>(&x), 8); }
  void i64(std::int64_t x) { f.write(reinterpret_cast<const char*>(&x), 8); }
  void f64(double x) { f.write(reinterpret_cast<const char*>(&x), 8); }
  void str(const std::string& s) {
    u64(s.size());
    f.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void vec(const std::vector<double>& v) {
    u64(v.size());
    f.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * 8));
  }
};

struct Reader {
  std::ifstream f;
  explicit Reader(const std::string& path) : f(path, std::ios::binary) {
    require(f.good(), Errc::io, "checkpoint: cannot open " + path);
  }
  std::uint64_t u64() {
    std::uint64_t x = 0;
    f.read(reinterpret_cast<char*>(&x), 8);
    require(f.good(), Errc::io, "checkpoint: truncated file");
    return x;
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() {
    double x = 0;
    f.read(reinterpret_cast<char*>(&x), 8);
    require(f.good(), Errc::io, "checkpoint: truncated file");
    return x;
  }
  std::string str() {
    const std::uint64_t n = u64();
    std::string s(n, '\0');
    f.read(s.data(), static_cast<std::streamsize>(n));
    require(f.good(), Errc::io, "checkpoint: truncated file");
    return s;
  }
  std::vector<double> vec() {
    const std::uint64_t n = u64();
    std::vector<double> v(n);
    f.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * 8));
    require(f.good(), Errc::io, "checkpoint: truncated file");
    return v;
  }
};

void write_adam(Writer& w, const approx::AdamState& a) {
  w.vec(a.m);
  w.vec(a.v);
  w.i64(a.t);
  w.f64(a.lr);
  w.f64(a.beta1);
  w.f64(a.beta2);
  w.f64(a.eps);
}

approx::AdamState read_adam(Reader& r) {
  approx::AdamState a;
  a.m = r.vec();
  a.v = r.vec();
  a.t = r.i64();
  a.lr = r.f64();
  a.beta1 = r.f64();
  a.beta2 = r.f64();
  a.eps = r.f64();
  return a;
}

void write_records(Writer& w, const rl::ReplayBuffer& buf) {
  w.u64(buf.capacity());
  w.u64(buf.cursor());
  w.u64(buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i) {
    const rl::ReplayRecord& rec = buf.at(i);
    w.vec(rec.state);
    w.vec(rec.goal);
    w.vec(rec.action);
    w.f64(rec.reward);
    w.vec(rec.next_state);
    w.u64(rec.done ? 1 : 0);
    w.u64(static_cast<std::uint64_t>(rec.level));
  }
}

void read_records(Reader& r, rl::ReplayBuffer& buf) {
  const std::uint64_t cap = r.u64();
  require(cap == buf.capacity(), Errc::io, "checkpoint: replay capacity mismatch");
  const std::uint64_t cursor = r.u64();
  const std::uint64_t n = r.u64();
  std::vector<rl::ReplayRecord> recs(n);
  for (auto& rec : recs) {
    rec.state = r.vec();
    rec.goal = r.vec();
    rec.action = r.vec();
    rec.reward = r.f64();
    rec.next_state = r.vec();
    rec.done = r.u64() != 0;
    rec.level = static_cast<Level>(r.u64());
  }
  buf.restore(std::move(recs), cursor);
}

void write_dg(Writer& w, const relabel::SubgoalDataset& dg) {
  w.i64(dg.epoch);
  w.str(dg.parser);
  w.str(dg.checkpoint_id);
  w.f64(dg.subgoals_per_demo);
  w.i64(dg.demo_count);
  w.u64(dg.transitions.size());
  for (const auto& t : dg.transitions) {
    w.vec(t.initial_state);
    w.vec(t.subgoal);
    w.vec(t.final_goal);
    w.u64(t.verified ? 1 : 0);
  }
  w.u64(dg.lower_pairs.size());
  for (const auto& p : dg.lower_pairs) {
    w.vec(p.state);
    w.vec(p.next_state);
    w.vec(p.subgoal);
    w.u64(p.verified ? 1 : 0);
  }
}

relabel::SubgoalDataset read_dg(Reader& r) {
  relabel::SubgoalDataset dg;
  dg.epoch = r.i64();
  dg.parser = r.str();
  dg.checkpoint_id = r.str();
  dg.subgoals_per_demo = r.f64();
  dg.demo_count = static_cast<int>(r.i64());
  dg.transitions.resize(r.u64());
  for (auto& t : dg.transitions) {
    t.initial_state = r.vec();
    t.subgoal = r.vec();
    t.final_goal = r.vec();
    t.verified = r.u64() != 0;
  }
  dg.lower_pairs.resize(r.u64());
  for (auto& p : dg.lower_pairs) {
    p.state = r.vec();
    p.next_state = r.vec();
    p.subgoal = r.vec();
    p.verified = r.u64() != 0;
  }
  return dg;
}

}  // namespace

// ---------------------------------------------------------------------------
// Training session
// ---------------------------------------------------------------------------

namespace {

struct LossAcc {
  double sum = 0;
  long n = 0;
  void add(double x) {
    sum += x;
    ++n;
  }
  double take() {
    const double m = n ? sum / n : 0.0;
    sum = 0;
    n = 0;
    return m;
  }
};

class TrainSession {
 public:
  explicit TrainSession(const RunConfig& cfg) : cfg_(cfg) { init(); }

  explicit TrainSession(const std::string& checkpoint_path) { load(checkpoint_path); }

  TrainResult run();

  const RunConfig& cfg() const { return cfg_; }

 private:
  void init();
  void init_structures();
  void load(const std::string& path);
  void save(const std::string& path);

  Rng& stream(const std::string& tag) {
    auto it = streams_.find(tag);
    require(it != streams_.end(), Errc::internal, "unknown rng stream " + tag);
    return it->second;
  }

  bool hierarchical() const { return cfg_.variant != Variant::flat; }
  bool learned_higher() const { return hierarchical() && !cfg_.higher_identity; }
  bool reg_active() const {
    return cfg_.variant == Variant::crisp && cfg_.reg.kind != RegKind::none &&
           cfg_.reg.psi > 0.0 && cfg_.parser != ParserKind::none;
  }

  void repopulate_due();
  void collect_flat_episode();
  void collect_hier_episode();
  void updates_for(long collected);
  void lower_update_cycle();
  void higher_update_cycle();
  void note_update(const rl::UpdateResult& r, LossAcc& acc);
  ParamVector higher_reg_grad(double* reg_loss, double* disc_loss);
  ParamVector lower_reg_grad(const std::vector<rl::ReplayRecord>& batch, double* reg_loss,
                             double* disc_loss);
  void emit_row();
  void eval_due();
  double run_eval();

  RunConfig cfg_;
  std::unique_ptr<Env> env_;
  hierarchy::HierarchyConfig hcfg_;
  std::unique_ptr<rl::SacAgent> lower_, higher_;
  std::unique_ptr<regularize::Discriminator> disc_hi_, disc_lo_;
  std::unique_ptr<rl::ReplayBuffer> lo_buf_, hi_buf_;
  demos::DemoDataset demoset_;
  relabel::SubgoalDataset dg_;
  std::vector<std::size_t> dg_verified_pairs_;
  std::map<std::string, Rng> streams_;

  long env_steps_ = 0, relabel_steps_ = 0, episode_idx_ = 0;
  long next_eval_ = 0, next_repop_ = 0, next_ckpt_ = 0;
  long nan_skips_ = 0;
  int consecutive_nan_ = 0;
  std::vector<MetricsRow> rows_;
  LossAcc a_lo_c_, a_lo_a_, a_hi_c_, a_hi_a_, a_d_lo_, a_d_hi_, a_r_lo_, a_r_hi_;
};

void TrainSession::init() {
  cfg_.validate();
  init_structures();
  const std::uint64_t s = cfg_.seed;
  for (const char* tag :
       {"episodes", "rollout.lo", "rollout.hi", "update.lo", "update.hi", "replay.lo",
        "replay.hi", "reg.lo", "reg.hi"})
    streams_.emplace(tag, Rng::stream(s, tag));

  const auto& c = env_->contract();
  {
    Rng init_lo = Rng::stream(s, "init.lo");
    rl::SacConfig sc = cfg_.sac;
    lower_ = std::make_unique<rl::SacAgent>(Level::lower, c.state_dim, c.goal_dim, c.action_dim,
                                            sc, init_lo);
  }
  if (learned_higher()) {
    Rng init_hi = Rng::stream(s, "init.hi");
    rl::SacConfig sc = cfg_.sac;
    if (cfg_.alpha_hi >= 0.0) sc.alpha = cfg_.alpha_hi;
    if (cfg_.higher_gamma_mode == "c_power")
      sc.gamma = std::pow(cfg_.sac.gamma, static_cast<double>(cfg_.c));
    higher_ = std::make_unique<rl::SacAgent>(Level::higher, c.state_dim, c.goal_dim, c.goal_dim,
                                             sc, init_hi);
  }
  if (reg_active()) {
    if (cfg_.reg.kind == RegKind::irl) {
      Rng init_dh = Rng::stream(s, "init.disc.hi");
      const int hi_in =
          cfg_.reg.conditioned_hi ? c.state_dim + 2 * c.goal_dim : c.goal_dim;
      disc_hi_ = std::make_unique<regularize::Discriminator>(Level::higher, hi_in,
                                                             cfg_.sac.hidden, cfg_.reg.disc_lr,
                                                             init_dh);
      if (cfg_.reg.lower_level && env_->lower_feature_dim() > 0) {
        Rng init_dl = Rng::stream(s, "init.disc.lo");
        disc_lo_ = std::make_unique<regularize::Discriminator>(
            Level::lower, env_->lower_feature_dim(), cfg_.sac.hidden, cfg_.reg.disc_lr, init_dl);
      }
    }
  }
  next_eval_ = cfg_.eval_every;
  next_repop_ = 0;
  next_ckpt_ = cfg_.checkpoint_every > 0 ? cfg_.checkpoint_every
                                         : std::numeric_limits<long>::max();
}

void TrainSession::init_structures() {
  env_ = envs::make_env(cfg_.env, cfg_.env_params_json);
  const auto& c = env_->contract();
  require(cfg_.T <= c.horizon, Errc::config,
          "config: T exceeds the environment horizon (" + std::to_string(c.horizon) + ")");
  hcfg_.c = hierarchical() ? cfg_.c : cfg_.T;
  hcfg_.T = cfg_.T;
  hcfg_.delta_lo =
      cfg_.delta_lo > 0 ? cfg_.delta_lo : 0.1 * c.workspace_diameter;
  hcfg_.delta_hi =
      cfg_.delta_hi > 0 ? cfg_.delta_hi : 0.1 * c.workspace_diameter;
  lo_buf_ = std::make_unique<rl::ReplayBuffer>(static_cast<std::size_t>(cfg_.capacity));
  hi_buf_ = std::make_unique<rl::ReplayBuffer>(static_cast<std::size_t>(cfg_.capacity));
  if (cfg_.parser != ParserKind::none) {
    demoset_ = demos::load_dataset(cfg_.demo_path);
    require(demoset_.state_dim == c.state_dim, Errc::dimension_mismatch,
            "demos: state dim mismatch with env");
    if (cfg_.demo_limit > 0 &&
        static_cast<int>(demoset_.trajectories.size()) > cfg_.demo_limit)
      demoset_.trajectories.resize(static_cast<std::size_t>(cfg_.demo_limit));
  }
  if (cfg_.reg.lower_level && reg_active() && cfg_.reg.kind == RegKind::irl)
    require(env_->lower_feature_dim() > 0 || !cfg_.reg.lower_level, Errc::config,
            "config: lower-level IRL unsupported for env " + cfg_.env);
  if (!cfg_.out_dir.empty()) {
    fs::create_directories(cfg_.out_dir);
    if (cfg_.env == "maze") {
      auto* maze = dynamic_cast<envs::MazeEnv*>(env_.get());
      std::ofstream f(cfg_.out_dir + "/maze.json");
      f << maze->spec().to_json() << "\n";
    }
  }
}

void TrainSession::repopulate_due() {
  if (cfg_.parser == ParserKind::none) return;
  while (env_steps_ >= next_repop_) {
    const long epoch = next_repop_;
    auto parse_env = env_->clone();
    relabel::ParseStats stats;
    // Deterministic lower policy snapshot for this repopulation.
    const rl::SacAgent& lower = *lower_;
    relabel::LowerPolicy policy = [&lower](const StateVec& st, const GoalVec& sg) {
      Vec zero(static_cast<std::size_t>(lower.action_dim()), 0.0);
      return lower.select_action_with_noise(st, sg, zero);
    };
    try {
      dg_ = relabel::repopulate(demoset_, policy, *parse_env, cfg_.parser, cfg_.window_k, cfg_.c,
                                hcfg_.delta_lo, epoch, "ckpt-" + std::to_string(env_steps_),
                                &stats);
    } catch (const Error& e) {
      if (e.code() == Errc::empty_dataset) {
        std::cerr << "train: empty D_g at epoch " << epoch << ", falling back to pure RL\n";
        dg_ = relabel::SubgoalDataset{};
        dg_.epoch = epoch;
      } else {
        throw;
      }
    }
    relabel_steps_ += stats.env_steps;
    dg_verified_pairs_.clear();
    for (std::size_t i = 0; i < dg_.lower_pairs.size(); ++i)
      if (!cfg_.reg.lower_pairs_verified_only || dg_.lower_pairs[i].verified)
        dg_verified_pairs_.push_back(i);
    if (!cfg_.out_dir.empty() && cfg_.save_dg_snapshots)
      dg_.save(cfg_.out_dir + "/dg_epoch_" + std::to_string(epoch) + ".jsonl");
    next_repop_ += cfg_.population_period;
  }
}

void TrainSession::collect_flat_episode() {
  Rng& episodes = stream("episodes");
  Rng& noise = stream("rollout.lo");
  StateVec s = env_->reset(episodes.next_u64());
  const GoalVec g = env_->goal();
  const bool warm = env_steps_ < cfg_.warmup;  // per-episode, as in the hierarchical path
  long collected = 0;
  for (int t = 0; t < cfg_.T; ++t) {
    ActionVec a;
    if (warm) {
      a.resize(static_cast<std::size_t>(env_->contract().action_dim));
      for (double& x : a) x = noise.uniform(-1.0, 1.0);
    } else {
      a = lower_->select_action(s, g, /*stochastic=*/true, noise);
    }
    EnvStep out = env_->step(a);
    const double r = sparse_reward(env_->achieved_goal(out.next_state), g, hcfg_.delta_hi);
    rl::ReplayRecord rec;
    rec.state = s;
    rec.goal = g;
    rec.action = a;
    rec.reward = r;
    rec.next_state = out.next_state;
    rec.done = r == 0.0;
    rec.level = Level::lower;
    lo_buf_->push(std::move(rec));
    s = out.next_state;
    ++collected;
    if (r == 0.0) break;
  }
  updates_for(collected);
}

void TrainSession::collect_hier_episode() {
  Rng& episodes = stream("episodes");
  Rng& lo_noise = stream("rollout.lo");
  Rng& hi_noise = stream("rollout.hi");
  const bool warm = env_steps_ < cfg_.warmup;
  hierarchy::HierEpisodeLog log = hierarchy::run_episode(
      *env_, learned_higher() ? higher_.get() : nullptr, *lower_, hcfg_,
      warm ? hierarchy::Mode::warmup : hierarchy::Mode::train, lo_noise, hi_noise,
      episodes.next_u64());
  hierarchy::higher_reward_shaping(log, cfg_.variant);
  for (auto& rec : log.lower) lo_buf_->push(std::move(rec));
  if (learned_higher()) {
    for (auto& dec : log.higher) {
      rl::ReplayRecord rec;
      rec.state = std::move(dec.state);
      rec.goal = std::move(dec.goal);
      rec.action = std::move(dec.raw_subgoal);
      rec.reward = dec.r_ex;
      rec.next_state = std::move(dec.next_state);
      rec.done = dec.done;
      rec.level = Level::higher;
      hi_buf_->push(std::move(rec));
    }
  }
  updates_for(log.steps);
}

void TrainSession::updates_for(long collected) {
  const int hi_every = cfg_.higher_update_every > 0 ? cfg_.higher_update_every : cfg_.c;
  for (long t = 1; t <= collected; ++t) {
    const long gs = env_steps_ + t;
    if (gs <= cfg_.warmup) continue;
    if (gs % cfg_.update_every == 0) lower_update_cycle();
    if (learned_higher() && gs % hi_every == 0 && hi_buf_->size() > 0) higher_update_cycle();
  }
  env_steps_ += collected;
}

void TrainSession::note_update(const rl::UpdateResult& r, LossAcc& acc) {
  if (!r.applied) {
    ++nan_skips_;
    ++consecutive_nan_;
    require(consecutive_nan_ <= cfg_.nan_abort_after, Errc::internal,
            "train: " + std::to_string(consecutive_nan_) + " consecutive non-finite updates");
    return;
  }
  consecutive_nan_ = 0;
  acc.add(r.loss);
}

void TrainSession::lower_update_cycle() {
  Rng& replay = stream("replay.lo");
  Rng& update = stream("update.lo");
  const std::size_t B = static_cast<std::size_t>(cfg_.sac.batch);
  std::vector<rl::ReplayRecord> batch;
  batch.reserve(B);
  for (std::size_t i : lo_buf_->sample_indices(replay, B)) batch.push_back(lo_buf_->at(i));
  note_update(lower_->critic_update(batch, update), a_lo_c_);

  ParamVector extra;
  const ParamVector* extra_ptr = nullptr;
  if (reg_active() && cfg_.reg.lower_level && !dg_.lower_pairs.empty()) {
    double reg_loss = 0, disc_loss = 0;
    extra = lower_reg_grad(batch, &reg_loss, &disc_loss);
    if (!extra.v.empty()) {
      for (double& g : extra.v) g *= cfg_.reg.psi;
      extra_ptr = &extra;
      a_r_lo_.add(reg_loss);
      if (cfg_.reg.kind == RegKind::irl) a_d_lo_.add(disc_loss);
    }
  }
  note_update(lower_->actor_update(batch, update, extra_ptr), a_lo_a_);
}

void TrainSession::higher_update_cycle() {
  Rng& replay = stream("replay.hi");
  Rng& update = stream("update.hi");
  const std::size_t B = static_cast<std::size_t>(cfg_.sac.batch);
  std::vector<rl::ReplayRecord> batch;
  batch.reserve(B);
  for (std::size_t i : hi_buf_->sample_indices(replay, B)) batch.push_back(hi_buf_->at(i));
  note_update(higher_->critic_update(batch, update), a_hi_c_);

  ParamVector extra;
  const ParamVector* extra_ptr = nullptr;
  if (reg_active() && !dg_.transitions.empty()) {
    double reg_loss = 0, disc_loss = 0;
    extra = higher_reg_grad(&reg_loss, &disc_loss);
    if (!extra.v.empty()) {
      for (double& g : extra.v) g *= cfg_.reg.psi;
      extra_ptr = &extra;
      a_r_hi_.add(reg_loss);
      if (cfg_.reg.kind == RegKind::irl) a_d_hi_.add(disc_loss);
    }
  }
  note_update(higher_->actor_update(batch, update, extra_ptr), a_hi_a_);
}

ParamVector TrainSession::higher_reg_grad(double* reg_loss, double* disc_loss) {
  Rng& rng = stream("reg.hi");
  const auto& contract = env_->contract();
  const int sd = contract.state_dim, gd = contract.goal_dim;
  const int B =
      static_cast<int>(std::min<std::size_t>(dg_.transitions.size(),
                                             static_cast<std::size_t>(cfg_.reg.batch)));
  std::vector<const relabel::SubgoalTransition*> sample;
  sample.reserve(static_cast<std::size_t>(B));
  for (int i = 0; i < B; ++i)
    sample.push_back(&dg_.transitions[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(dg_.transitions.size()) - 1))]);

  Matrix X(B, sd + gd);
  for (int r = 0; r < B; ++r) {
    std::copy(sample[r]->initial_state.begin(), sample[r]->initial_state.end(), X.row(r));
    std::copy(sample[r]->final_goal.begin(), sample[r]->final_goal.end(), X.row(r) + sd);
  }

  if (cfg_.reg.kind == RegKind::bc) {
    Matrix mean_tanh;
    approx::FwdCache cache;
    higher_->actor_mean(X, mean_tanh, cache);
    Matrix targets(B, gd);
    for (int r = 0; r < B; ++r) {
      const Vec raw = hierarchy::goal_space_to_raw(sample[r]->subgoal, contract);
      std::copy(raw.begin(), raw.end(), targets.row(r));
    }
    Matrix d_out;
    *reg_loss = regularize::bc_loss(mean_tanh, targets, &d_out);
    return higher_->actor_backward_mean(cache, d_out, mean_tanh);
  }

  // IRL: adversarial step on the discriminator, then the generator loss
  // through a fresh discriminator pass.
  rl::SacAgent::ActorEval ev = higher_->actor_eval(X, rng);
  const int disc_in = disc_hi_->input_dim();
  Matrix expert_rows(B, disc_in), policy_rows(B, disc_in);
  std::vector<Vec> mapped(static_cast<std::size_t>(B));
  for (int r = 0; r < B; ++r) {
    mapped[static_cast<std::size_t>(r)] =
        hierarchy::subgoal_to_goal_space(ev.samples[static_cast<std::size_t>(r)].action, contract);
    double* er = expert_rows.row(r);
    double* pr = policy_rows.row(r);
    int off = 0;
    if (cfg_.reg.conditioned_hi) {
      std::copy(sample[r]->initial_state.begin(), sample[r]->initial_state.end(), er);
      std::copy(sample[r]->final_goal.begin(), sample[r]->final_goal.end(), er + sd);
      std::copy(sample[r]->initial_state.begin(), sample[r]->initial_state.end(), pr);
      std::copy(sample[r]->final_goal.begin(), sample[r]->final_goal.end(), pr + sd);
      off = sd + gd;
    }
    std::copy(sample[r]->subgoal.begin(), sample[r]->subgoal.end(), er + off);
    const Vec& m = mapped[static_cast<std::size_t>(r)];
    std::copy(m.begin(), m.end(), pr + off);
  }
  *disc_loss = disc_hi_->update(expert_rows, policy_rows);

  Matrix d_rows;
  *reg_loss = disc_hi_->generator_loss(policy_rows, &d_rows);
  // Chain through the affine goal-space map back to raw actions.
  const int off = cfg_.reg.conditioned_hi ? sd + gd : 0;
  Matrix d_action(B, gd);
  for (int r = 0; r < B; ++r)
    for (int d = 0; d < gd; ++d)
      d_action.at(r, d) = d_rows.at(r, off + d) * 0.5 *
                          (contract.goal_high[static_cast<std::size_t>(d)] -
                           contract.goal_low[static_cast<std::size_t>(d)]);
  return higher_->actor_backward_from_samples(ev, d_action, nullptr);
}

ParamVector TrainSession::lower_reg_grad(const std::vector<rl::ReplayRecord>& batch,
                                         double* reg_loss, double* disc_loss) {
  Rng& rng = stream("reg.lo");
  if (dg_verified_pairs_.empty()) return {};
  const int B = static_cast<int>(std::min<std::size_t>(
      {batch.size(), dg_verified_pairs_.size(), static_cast<std::size_t>(cfg_.reg.batch)}));

  if (cfg_.reg.kind == RegKind::bc) {
    const auto& c = env_->contract();
    Matrix X(B, c.state_dim + c.goal_dim);
    Matrix targets(B, c.action_dim);
    for (int r = 0; r < B; ++r) {
      const auto& p = dg_.lower_pairs[dg_verified_pairs_[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(dg_verified_pairs_.size()) - 1))]];
      std::copy(p.state.begin(), p.state.end(), X.row(r));
      std::copy(p.subgoal.begin(), p.subgoal.end(), X.row(r) + c.state_dim);
      const ActionVec pa = env_->lower_pseudo_action(p.state, p.next_state);
      std::copy(pa.begin(), pa.end(), targets.row(r));
    }
    Matrix mean_tanh;
    approx::FwdCache cache;
    lower_->actor_mean(X, mean_tanh, cache);
    Matrix d_out;
    *reg_loss = regularize::bc_loss(mean_tanh, targets, &d_out);
    return lower_->actor_backward_mean(cache, d_out, mean_tanh);
  }

  if (!disc_lo_) return {};
  const int fd = env_->lower_feature_dim();
  const auto& c = env_->contract();

  Matrix expert_rows(B, fd);
  for (int r = 0; r < B; ++r) {
    const auto& p = dg_.lower_pairs[dg_verified_pairs_[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(dg_verified_pairs_.size()) - 1))]];
    const Vec f = env_->lower_expert_feature(p.state, p.next_state);
    std::copy(f.begin(), f.end(), expert_rows.row(r));
  }

  // Policy side: fresh reparameterized actions at replay states, pushed
  // through the free-space kinematic feature model.
  Matrix X(B, c.state_dim + c.goal_dim);
  for (int r = 0; r < B; ++r) {
    std::copy(batch[static_cast<std::size_t>(r)].state.begin(),
              batch[static_cast<std::size_t>(r)].state.end(), X.row(r));
    std::copy(batch[static_cast<std::size_t>(r)].goal.begin(),
              batch[static_cast<std::size_t>(r)].goal.end(), X.row(r) + c.state_dim);
  }
  rl::SacAgent::ActorEval ev = lower_->actor_eval(X, rng);
  Matrix policy_rows(B, fd);
  std::vector<std::vector<double>> jac(static_cast<std::size_t>(B));
  for (int r = 0; r < B; ++r) {
    const Vec f = env_->lower_policy_feature(batch[static_cast<std::size_t>(r)].state,
                                             ev.samples[static_cast<std::size_t>(r)].action,
                                             &jac[static_cast<std::size_t>(r)]);
    std::copy(f.begin(), f.end(), policy_rows.row(r));
  }
  *disc_loss = disc_lo_->update(expert_rows, policy_rows);

  Matrix d_rows;
  *reg_loss = disc_lo_->generator_loss(policy_rows, &d_rows);
  Matrix d_action(B, c.action_dim);
  for (int r = 0; r < B; ++r) {
    const auto& J = jac[static_cast<std::size_t>(r)];  // fd x action_dim row-major
    for (int a = 0; a < c.action_dim; ++a) {
      double acc = 0;
      for (int i = 0; i < fd; ++i)
        acc += d_rows.at(r, i) * J[static_cast<std::size_t>(i) * c.action_dim + a];
      d_action.at(r, a) = acc;
    }
  }
  return lower_->actor_backward_from_samples(ev, d_action, nullptr);
}

double TrainSession::run_eval() {
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(cfg_.eval_rollouts));
  for (std::size_t i = 0; i < seeds.size(); ++i) seeds[i] = cfg_.eval_seed_base + i;
  auto eval_env = env_->clone();
  std::vector<hierarchy::HierEpisodeLog> logs;
  const double rate =
      evaluate(*eval_env, learned_higher() ? higher_.get() : nullptr, *lower_, hcfg_, seeds,
               cfg_.save_eval_episodes && !cfg_.out_dir.empty() ? &logs : nullptr);
  if (!logs.empty()) {
    std::ofstream f(cfg_.out_dir + "/eval_episodes.jsonl", std::ios::app);
    for (const auto& log : logs)
      f << "{\"step\":" << env_steps_ << ",\"log\":" << hierarchy::episode_to_jsonl(log)
        << "}\n";
  }
  return rate;
}

void TrainSession::emit_row() {
  MetricsRow row;
  row.step = env_steps_;
  row.relabel_steps = relabel_steps_;
  row.loss_lo_critic = a_lo_c_.take();
  row.loss_lo_actor = a_lo_a_.take();
  row.loss_hi_critic = a_hi_c_.take();
  row.loss_hi_actor = a_hi_a_.take();
  row.loss_disc_lo = a_d_lo_.take();
  row.loss_disc_hi = a_d_hi_.take();
  row.loss_reg_lo = a_r_lo_.take();
  row.loss_reg_hi = a_r_hi_.take();
  row.success = run_eval();
  row.dg_size = static_cast<long>(dg_.transitions.size());
  row.subgoals_per_demo = dg_.subgoals_per_demo;
  rows_.push_back(row);
}

void TrainSession::eval_due() {
  if (env_steps_ < next_eval_) return;
  emit_row();
  while (next_eval_ <= env_steps_) next_eval_ += cfg_.eval_every;
}

TrainResult TrainSession::run() {
  const long stop = cfg_.stop_at > 0 ? std::min(cfg_.stop_at, cfg_.total_steps) : cfg_.total_steps;
  while (env_steps_ < stop) {
    repopulate_due();
    if (cfg_.variant == Variant::flat) {
      collect_flat_episode();
    } else {
      collect_hier_episode();
    }
    ++episode_idx_;
    eval_due();
    if (env_steps_ >= next_ckpt_ && !cfg_.out_dir.empty()) {
      save(cfg_.out_dir + "/ckpt_" + std::to_string(env_steps_) + ".bin");
      while (next_ckpt_ <= env_steps_) next_ckpt_ += std::max<long>(1, cfg_.checkpoint_every);
    }
  }
  // Final row only at the natural end of the budget; a stop_at checkpoint
  // must leave the row sequence exactly as the uninterrupted run writes it.
  if (env_steps_ >= cfg_.total_steps && (rows_.empty() || rows_.back().step != env_steps_))
    emit_row();

  TrainResult res;
  res.rows = rows_;
  res.env_steps = env_steps_;
  res.relabel_steps = relabel_steps_;
  res.nan_skips = nan_skips_;
  res.final_success = rows_.empty() ? 0.0 : rows_.back().success;
  if (!cfg_.out_dir.empty()) {
    std::ofstream mf(cfg_.out_dir + "/metrics.csv");
    mf << metrics_to_csv(rows_);
    res.checkpoint_path = cfg_.out_dir + "/checkpoint.bin";
    save(res.checkpoint_path);
    json summary;
    summary["env_steps"] = env_steps_;
    summary["relabel_steps"] = relabel_steps_;
    summary["nan_skips"] = nan_skips_;
    summary["final_success"] = res.final_success;
    summary["variant"] = hierarchy::variant_to_string(cfg_.variant);
    std::ofstream sf(cfg_.out_dir + "/summary.json");
    sf << summary.dump(2) << "\n";
  }
  return res;
}

void TrainSession::save(const std::string& path) {
  Writer w(path);
  w.u64(kCkptMagic);
  w.str(cfg_.to_string());
  w.i64(env_steps_);
  w.i64(relabel_steps_);
  w.i64(episode_idx_);
  w.i64(next_eval_);
  w.i64(next_repop_);
  w.i64(next_ckpt_);
  w.i64(nan_skips_);
  w.i64(consecutive_nan_);
  for (LossAcc* acc : {&a_lo_c_, &a_lo_a_, &a_hi_c_, &a_hi_a_, &a_d_lo_, &a_d_hi_, &a_r_lo_,
                       &a_r_hi_}) {
    w.f64(acc->sum);
    w.i64(acc->n);
  }

  w.u64(streams_.size());
  for (auto& [tag, rng] : streams_) {
    w.str(tag);
    w.str(rng.save_state());
  }

  auto write_agent = [&](const rl::SacAgent& a) {
    w.vec(a.actor_params().v);
    w.vec(const_cast<rl::SacAgent&>(a).critic1_params().v);
    w.vec(const_cast<rl::SacAgent&>(a).critic2_params().v);
    w.vec(a.target1_params().v);
    w.vec(a.target2_params().v);
    write_adam(w, const_cast<rl::SacAgent&>(a).actor_opt());
    write_adam(w, const_cast<rl::SacAgent&>(a).critic1_opt());
    write_adam(w, const_cast<rl::SacAgent&>(a).critic2_opt());
  };
  w.u64(1 + (learned_higher() ? 1 : 0));
  write_agent(*lower_);
  if (learned_higher()) write_agent(*higher_);

  w.u64((disc_hi_ ? 1u : 0u) + (disc_lo_ ? 2u : 0u));
  auto write_disc = [&](regularize::Discriminator& d) {
    w.vec(d.params().v);
    write_adam(w, d.opt());
  };
  if (disc_hi_) write_disc(*disc_hi_);
  if (disc_lo_) write_disc(*disc_lo_);

  write_records(w, *lo_buf_);
  write_records(w, *hi_buf_);
  write_dg(w, dg_);
  w.str(metrics_to_csv(rows_));
  require(w.f.good(), Errc::io, "checkpoint: write failure on " + path);
}

void TrainSession::load(const std::string& path) {
  Reader r(path);
  require(r.u64() == kCkptMagic, Errc::io, "checkpoint: bad magic in " + path);
  cfg_ = RunConfig::from_string(r.str());
  init();  // rebuild structures; state overwritten below

  env_steps_ = r.i64();
  relabel_steps_ = r.i64();
  episode_idx_ = r.i64();
  next_eval_ = r.i64();
  next_repop_ = r.i64();
  next_ckpt_ = r.i64();
  nan_skips_ = r.i64();
  consecutive_nan_ = static_cast<int>(r.i64());
  for (LossAcc* acc : {&a_lo_c_, &a_lo_a_, &a_hi_c_, &a_hi_a_, &a_d_lo_, &a_d_hi_, &a_r_lo_,
                       &a_r_hi_}) {
    acc->sum = r.f64();
    acc->n = r.i64();
  }

  const std::uint64_t n_streams = r.u64();
  for (std::uint64_t i = 0; i < n_streams; ++i) {
    const std::string tag = r.str();
    const std::string state = r.str();
    stream(tag).load_state(state);
  }

  auto read_agent = [&](rl::SacAgent& a) {
    ParamVector actor{r.vec()}, c1{r.vec()}, c2{r.vec()}, t1{r.vec()}, t2{r.vec()};
    a.set_params(std::move(actor), std::move(c1), std::move(c2), std::move(t1), std::move(t2));
    a.actor_opt() = read_adam(r);
    a.critic1_opt() = read_adam(r);
    a.critic2_opt() = read_adam(r);
  };
  const std::uint64_t n_agents = r.u64();
  require(n_agents == 1 + (learned_higher() ? 1u : 0u), Errc::io,
          "checkpoint: agent count mismatch");
  read_agent(*lower_);
  if (learned_higher()) read_agent(*higher_);

  const std::uint64_t disc_mask = r.u64();
  require(((disc_mask & 1u) != 0) == (disc_hi_ != nullptr) &&
              ((disc_mask & 2u) != 0) == (disc_lo_ != nullptr),
          Errc::io, "checkpoint: discriminator layout mismatch");
  auto read_disc = [&](regularize::Discriminator& d) {
    d.params().v = r.vec();
    d.opt() = read_adam(r);
  };
  if (disc_hi_) read_disc(*disc_hi_);
  if (disc_lo_) read_disc(*disc_lo_);

  read_records(r, *lo_buf_);
  read_records(r, *hi_buf_);
  dg_ = read_dg(r);
  dg_verified_pairs_.clear();
  for (std::size_t i = 0; i < dg_.lower_pairs.size(); ++i)
    if (!cfg_.reg.lower_pairs_verified_only || dg_.lower_pairs[i].verified)
      dg_verified_pairs_.push_back(i);
  rows_ = metrics_from_csv(r.str());
  cfg_.stop_at = 0;  // stop_at is one-shot; a resumed run continues to total
}

}  // namespace

TrainResult train(const RunConfig& cfg) {
  TrainSession session(cfg);
  return session.run();
}

TrainResult resume(const std::string& checkpoint_path) {
  TrainSession session(checkpoint_path);
  return session.run();
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

double evaluate(Env& env, rl::SacAgent* higher, rl::SacAgent& lower,
                const hierarchy::HierarchyConfig& hcfg, const std::vector<std::uint64_t>& seeds,
                std::vector<hierarchy::HierEpisodeLog>* logs) {
  require(!seeds.empty(), Errc::invalid_argument, "evaluate: need at least one rollout");
  Rng unused_lo(0), unused_hi(0);
  int successes = 0;
  for (std::uint64_t seed : seeds) {
    hierarchy::HierEpisodeLog log = hierarchy::run_episode(
        env, higher, lower, hcfg, hierarchy::Mode::eval, unused_lo, unused_hi, seed);
    successes += log.success ? 1 : 0;
    if (logs) logs->push_back(std::move(log));
  }
  return static_cast<double>(successes) / static_cast<double>(seeds.size());
}

void EvalSuite::save(const std::string& path) const {
  json j;
  j["env"] = env;
  j["params"] = json::parse(params_json);
  j["seeds"] = seeds;
  std::ofstream f(path);
  require(f.good(), Errc::io, "eval suite: cannot open " + path);
  f << j.dump(2) << "\n";
}

EvalSuite EvalSuite::load(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), Errc::io, "eval suite: cannot open " + path);
  json j = json::parse(f, nullptr, true, true);
  EvalSuite s;
  s.env = j.at("env").get<std::string>();
  s.params_json = j.value("params", json::object()).dump();
  s.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  return s;
}

namespace {

// Reconstructs agents (and config) from a checkpoint without touching the
// training loop; shared by eval and relabel entry points.
struct LoadedPolicies {
  RunConfig cfg;
  std::unique_ptr<Env> env;
  std::unique_ptr<rl::SacAgent> lower, higher;
  hierarchy::HierarchyConfig hcfg;
};

LoadedPolicies load_policies(const std::string& checkpoint_path) {
  Reader r(checkpoint_path);
  require(r.u64() == kCkptMagic, Errc::io, "checkpoint: bad magic in " + checkpoint_path);
  LoadedPolicies lp;
  lp.cfg = RunConfig::from_string(r.str());
  lp.env = envs::make_env(lp.cfg.env, lp.cfg.env_params_json);
  const auto& c = lp.env->contract();
  lp.hcfg.c = lp.cfg.variant == Variant::flat ? lp.cfg.T : lp.cfg.c;
  lp.hcfg.T = lp.cfg.T;
  lp.hcfg.delta_lo = lp.cfg.delta_lo > 0 ? lp.cfg.delta_lo : 0.1 * c.workspace_diameter;
  lp.hcfg.delta_hi = lp.cfg.delta_hi > 0 ? lp.cfg.delta_hi : 0.1 * c.workspace_diameter;

  // Skip counters, loss accumulators and streams.
  for (int i = 0; i < 8 + 16; ++i) r.i64();
  const std::uint64_t n_streams = r.u64();
  for (std::uint64_t i = 0; i < n_streams; ++i) {
    r.str();
    r.str();
  }

  const bool learned_higher = lp.cfg.variant != Variant::flat && !lp.cfg.higher_identity;
  const std::uint64_t n_agents = r.u64();
  require(n_agents == 1 + (learned_higher ? 1u : 0u), Errc::io,
          "checkpoint: agent count mismatch");
  Rng dummy(0);
  auto read_agent = [&](Level level, int action_dim) {
    rl::SacConfig sc = lp.cfg.sac;
    auto agent = std::make_unique<rl::SacAgent>(level, c.state_dim, c.goal_dim, action_dim, sc,
                                                dummy);
    ParamVector actor{r.vec()}, c1{r.vec()}, c2{r.vec()}, t1{r.vec()}, t2{r.vec()};
    agent->set_params(std::move(actor), std::move(c1), std::move(c2), std::move(t1),
                      std::move(t2));
    agent->actor_opt() = read_adam(r);
    agent->critic1_opt() = read_adam(r);
    agent->critic2_opt() = read_adam(r);
    return agent;
  };
  lp.lower = read_agent(Level::lower, c.action_dim);
  if (learned_higher) lp.higher = read_agent(Level::higher, c.goal_dim);
  return lp;
}

}  // namespace

double evaluate_checkpoint(const std::string& checkpoint_path, const std::string& suite_path,
                           int rollouts) {
  require(rollouts >= 1, Errc::invalid_argument, "evaluate: rollouts must be >= 1");
  LoadedPolicies lp = load_policies(checkpoint_path);
  std::vector<std::uint64_t> seeds;
  std::unique_ptr<Env> env;
  if (!suite_path.empty()) {
    EvalSuite suite = EvalSuite::load(suite_path);
    env = envs::make_env(suite.env, suite.params_json);
    seeds = suite.seeds;
    if (static_cast<int>(seeds.size()) > rollouts)
      seeds.resize(static_cast<std::size_t>(rollouts));
  } else {
    env = lp.env->clone();
  }
  while (static_cast<int>(seeds.size()) < rollouts)
    seeds.push_back(lp.cfg.eval_seed_base + seeds.size());
  return evaluate(*env, lp.higher.get(), *lp.lower, lp.hcfg, seeds);
}

void relabel_with_checkpoint(const std::string& demos_path, const std::string& checkpoint_path,
                             ParserKind parser, int window_k, const std::string& out_path) {
  LoadedPolicies lp = load_policies(checkpoint_path);
  demos::DemoDataset ds = demos::load_dataset(demos_path);
  auto parse_env = lp.env->clone();
  const rl::SacAgent& lower = *lp.lower;
  relabel::LowerPolicy policy = [&lower](const StateVec& st, const GoalVec& sg) {
    Vec zero(static_cast<std::size_t>(lower.action_dim()), 0.0);
    return lower.select_action_with_noise(st, sg, zero);
  };
  relabel::ParseStats stats;
  relabel::SubgoalDataset dg =
      relabel::repopulate(ds, policy, *parse_env, parser, window_k, lp.cfg.c, lp.hcfg.delta_lo, 0,
                          checkpoint_path, &stats);
  dg.save(out_path);
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

SweepResult sweep(const RunConfig& base, const std::string& grid_json, const std::string& out_dir,
                  int parallelism) {
  json grid = json::parse(grid_json);
  require(grid.is_object(), Errc::config, "sweep: grid must be a JSON object");

  std::vector<std::uint64_t> seeds = {base.seed};
  if (grid.contains("seeds")) seeds = grid["seeds"].get<std::vector<std::uint64_t>>();

  struct Axis {
    std::string key;
    std::vector<double> values;
  };
  std::vector<Axis> axes;
  for (const char* key : {"psi", "population_period", "window_k", "demo_limit"})
    if (grid.contains(key)) axes.push_back({key, grid[key].get<std::vector<double>>()});

  std::vector<std::map<std::string, double>> points = {{}};
  for (const Axis& ax : axes) {
    std::vector<std::map<std::string, double>> next;
    for (const auto& p : points)
      for (double v : ax.values) {
        auto q = p;
        q[ax.key] = v;
        next.push_back(std::move(q));
      }
    points = std::move(next);
  }

  struct Job {
    RunConfig cfg;
    std::string label;
  };
  std::vector<Job> jobs;
  for (const auto& point : points) {
    for (std::uint64_t seed : seeds) {
      RunConfig cfg = base;
      std::string label;
      for (const auto& [key, value] : point) {
        if (!label.empty()) label += ",";
        std::ostringstream os;
        os << key << "=" << value;
        label += os.str();
        if (key == "psi") cfg.reg.psi = value;
        else if (key == "population_period") cfg.population_period = static_cast<long>(value);
        else if (key == "window_k") cfg.window_k = static_cast<int>(value);
        else if (key == "demo_limit") cfg.demo_limit = static_cast<int>(value);
      }
      if (label.empty()) label = "base";
      cfg.seed = seed;
      cfg.out_dir = out_dir + "/" + label + "/seed" + std::to_string(seed);
      jobs.push_back({std::move(cfg), label});
    }
  }

  fs::create_directories(out_dir);
  std::atomic<int> failures{0};
  std::atomic<std::size_t> next{0};
  const int workers = parallelism > 0
                          ? parallelism
                          : std::max(1u, std::thread::hardware_concurrency());
  json failures_log = json::array();
  std::mutex log_mutex;
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      try {
        train(jobs[i].cfg);
      } catch (const std::exception& e) {
        ++failures;
        std::lock_guard<std::mutex> lock(log_mutex);
        failures_log.push_back({{"run", jobs[i].cfg.out_dir}, {"error", e.what()}});
      }
    }
  };
  std::vector<std::thread> pool;
  for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  json summary;
  summary["runs"] = jobs.size();
  summary["failures"] = failures_log;
  std::ofstream sf(out_dir + "/sweep_summary.json");
  sf << summary.dump(2) << "\n";

  SweepResult res;
  res.runs = static_cast<int>(jobs.size());
  res.failures = failures.load();
  res.archive_dir = out_dir;
  return res;
}

}  // namespace crisp::harness
