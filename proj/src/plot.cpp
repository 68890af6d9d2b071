#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "crisp/envs.hpp"
#include "crisp/harness.hpp"
#include "crisp/relabel.hpp"
#include "json.hpp"

namespace crisp::harness {

namespace fs = std::filesystem;

namespace {

constexpr int kW = 640, kH = 420, kMargin = 50;
const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                         "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

struct SvgCanvas {
  std::ostringstream body;
  double x_min = 0, x_max = 1, y_min = 0, y_max = 1;

  double px(double x) const {
    return kMargin + (x - x_min) / std::max(1e-12, x_max - x_min) * (kW - 2 * kMargin);
  }
  double py(double y) const {
    return kH - kMargin - (y - y_min) / std::max(1e-12, y_max - y_min) * (kH - 2 * kMargin);
  }

  void axes(const std::string& xlabel, const std::string& ylabel) {
    body << "<rect x='" << kMargin << "' y='" << kMargin << "' width='" << kW - 2 * kMargin
         << "' height='" << kH - 2 * kMargin << "' fill='none' stroke='#333'/>\n";
    for (int i = 0; i <= 4; ++i) {
      const double ty = y_min + (y_max - y_min) * i / 4.0;
      const double tx = x_min + (x_max - x_min) * i / 4.0;
      body << "<text x='" << kMargin - 8 << "' y='" << py(ty) + 4
           << "' text-anchor='end' font-size='11'>" << ty << "</text>\n";
      body << "<text x='" << px(tx) << "' y='" << kH - kMargin + 16
           << "' text-anchor='middle' font-size='11'>" << tx << "</text>\n";
    }
    body << "<text x='" << kW / 2 << "' y='" << kH - 8
         << "' text-anchor='middle' font-size='13'>" << xlabel << "</text>\n";
    body << "<text x='14' y='" << kH / 2 << "' text-anchor='middle' font-size='13' transform='rotate(-90 14 "
         << kH / 2 << ")'>" << ylabel << "</text>\n";
  }

  void band(const std::vector<double>& xs, const std::vector<double>& lo,
            const std::vector<double>& hi, const std::string& color) {
    body << "<path d='M";
    for (std::size_t i = 0; i < xs.size(); ++i) body << px(xs[i]) << "," << py(lo[i]) << " ";
    for (std::size_t i = xs.size(); i-- > 0;) body << px(xs[i]) << "," << py(hi[i]) << " ";
    body << "Z' fill='" << color << "' opacity='0.18' stroke='none'/>\n";
  }

  void line(const std::vector<double>& xs, const std::vector<double>& ys,
            const std::string& color) {
    body << "<polyline fill='none' stroke='" << color << "' stroke-width='1.8' points='";
    for (std::size_t i = 0; i < xs.size(); ++i) body << px(xs[i]) << "," << py(ys[i]) << " ";
    body << "'/>\n";
  }

  void write(const std::string& path, const std::string& title) {
    std::ofstream f(path);
    require(f.good(), Errc::io, "plot: cannot open " + path);
    f << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kW << "' height='" << kH << "'>\n";
    f << "<text x='" << kW / 2 << "' y='24' text-anchor='middle' font-size='15'>" << title
      << "</text>\n";
    f << body.str() << "</svg>\n";
  }
};

double interp(const std::vector<std::pair<double, double>>& s, double x) {
  if (s.empty()) return 0.0;
  if (x <= s.front().first) return s.front().second;
  if (x >= s.back().first) return s.back().second;
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (s[i].first >= x) {
      const double t = (x - s[i - 1].first) / std::max(1e-12, s[i].first - s[i - 1].first);
      return s[i - 1].second + t * (s[i].second - s[i - 1].second);
    }
  }
  return s.back().second;
}

}  // namespace

CurveStats curve_stats(const std::vector<std::vector<std::pair<double, double>>>& series) {
  CurveStats out;
  require(!series.empty() && !series.front().empty(), Errc::invalid_argument,
          "curve_stats: empty series");
  for (const auto& [x, y] : series.front()) out.steps.push_back(x);
  for (std::size_t i = 1; i < series.size(); ++i) {
    if (series[i].size() != series.front().size()) {
      out.interpolated = true;
      continue;
    }
    for (std::size_t k = 0; k < series[i].size(); ++k)
      if (series[i][k].first != out.steps[k]) {
        out.interpolated = true;
        break;
      }
  }
  out.mean.resize(out.steps.size());
  out.lo.assign(out.steps.size(), std::numeric_limits<double>::max());
  out.hi.assign(out.steps.size(), std::numeric_limits<double>::lowest());
  for (std::size_t k = 0; k < out.steps.size(); ++k) {
    double sum = 0;
    for (const auto& s : series) {
      const double v = interp(s, out.steps[k]);
      sum += v;
      out.lo[k] = std::min(out.lo[k], v);
      out.hi[k] = std::max(out.hi[k], v);
    }
    out.mean[k] = sum / static_cast<double>(series.size());
  }
  return out;
}

std::vector<std::string> plot_success_curves(const std::string& archive_dir,
                                             const std::string& out_dir) {
  require(fs::is_directory(archive_dir), Errc::io, "plot: no such archive " + archive_dir);
  fs::create_directories(out_dir);

  // archive/<label>/seed*/metrics.csv
  std::map<std::string, std::vector<std::vector<std::pair<double, double>>>> groups;
  for (const auto& label_entry : fs::directory_iterator(archive_dir)) {
    if (!label_entry.is_directory()) continue;
    std::vector<fs::path> runs;
    if (fs::exists(label_entry.path() / "metrics.csv")) {
      runs.push_back(label_entry.path());
    } else {
      for (const auto& run : fs::directory_iterator(label_entry.path()))
        if (run.is_directory() && fs::exists(run.path() / "metrics.csv"))
          runs.push_back(run.path());
    }
    std::sort(runs.begin(), runs.end());
    for (const auto& run : runs) {
      std::ifstream f(run / "metrics.csv");
      std::stringstream ss;
      ss << f.rdbuf();
      std::vector<std::pair<double, double>> series;
      for (const MetricsRow& r : metrics_from_csv(ss.str()))
        series.push_back({static_cast<double>(r.step), r.success});
      if (!series.empty()) groups[label_entry.path().filename().string()].push_back(series);
    }
  }
  require(!groups.empty(), Errc::empty_dataset, "plot: no metrics found under " + archive_dir);

  SvgCanvas svg;
  svg.x_min = std::numeric_limits<double>::max();
  svg.x_max = 0;
  svg.y_min = 0;
  svg.y_max = 1;
  for (auto& [label, series] : groups)
    for (auto& s : series) {
      svg.x_min = std::min(svg.x_min, s.front().first);
      svg.x_max = std::max(svg.x_max, s.back().first);
    }
  svg.axes("environment steps", "success rate");

  int color = 0, legend_y = kMargin + 14;
  for (auto& [label, series] : groups) {
    const CurveStats st = curve_stats(series);
    if (st.interpolated)
      std::cerr << "plot: step grids differ for '" << label << "', interpolated\n";
    const std::string c = kColors[color++ % 8];
    svg.band(st.steps, st.lo, st.hi, c);
    svg.line(st.steps, st.mean, c);
    svg.body << "<rect x='" << kW - kMargin - 150 << "' y='" << legend_y - 9
             << "' width='12' height='12' fill='" << c << "'/>\n";
    svg.body << "<text x='" << kW - kMargin - 132 << "' y='" << legend_y + 2
             << "' font-size='12'>" << label << "</text>\n";
    legend_y += 18;
  }

  const std::string path = out_dir + "/success_rate.svg";
  svg.write(path, "Success rate (mean, min-max band)");
  return {path};
}

std::vector<std::string> plot_curriculum(const std::string& run_dir, const std::string& out_dir) {
  require(fs::is_directory(run_dir), Errc::io, "plot: no such run dir " + run_dir);
  fs::create_directories(out_dir);

  std::vector<std::pair<long, fs::path>> snapshots;
  for (const auto& entry : fs::directory_iterator(run_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("dg_epoch_", 0) == 0 && name.size() > 15)
      snapshots.push_back({std::stol(name.substr(9)), entry.path()});
  }
  require(!snapshots.empty(), Errc::empty_dataset, "plot: no dg_epoch_*.jsonl in " + run_dir);
  std::sort(snapshots.begin(), snapshots.end());

  // First, middle and last repopulation snapshots.
  std::vector<std::size_t> picks = {0};
  if (snapshots.size() > 2) picks.push_back(snapshots.size() / 2);
  if (snapshots.size() > 1) picks.push_back(snapshots.size() - 1);

  envs::MazeSpec maze;
  bool have_maze = false;
  if (fs::exists(run_dir + "/maze.json")) {
    std::ifstream f(run_dir + "/maze.json");
    std::stringstream ss;
    ss << f.rdbuf();
    maze = envs::MazeSpec::from_json(ss.str());
    have_maze = true;
  }

  std::vector<std::string> written;
  for (std::size_t pick : picks) {
    const auto& [epoch, path] = snapshots[pick];
    relabel::SubgoalDataset dg = relabel::SubgoalDataset::load(path.string());
    SvgCanvas svg;
    if (have_maze) {
      svg.x_min = 0;
      svg.x_max = maze.width * maze.cell_size;
      svg.y_min = 0;
      svg.y_max = maze.height * maze.cell_size;
    } else {
      svg.x_min = svg.y_min = std::numeric_limits<double>::max();
      svg.x_max = svg.y_max = std::numeric_limits<double>::lowest();
      for (const auto& t : dg.transitions) {
        if (t.subgoal.size() < 2) continue;
        svg.x_min = std::min(svg.x_min, t.subgoal[0]);
        svg.x_max = std::max(svg.x_max, t.subgoal[0]);
        svg.y_min = std::min(svg.y_min, t.subgoal[1]);
        svg.y_max = std::max(svg.y_max, t.subgoal[1]);
      }
    }
    svg.axes("x", "y");
    if (have_maze) {
      for (int cy = 0; cy < maze.height; ++cy)
        for (int cx = 0; cx < maze.width; ++cx)
          if (maze.occupied(cx, cy)) {
            const double x0 = svg.px(cx * maze.cell_size), y0 = svg.py((cy + 1) * maze.cell_size);
            const double x1 = svg.px((cx + 1) * maze.cell_size), y1 = svg.py(cy * maze.cell_size);
            svg.body << "<rect x='" << x0 << "' y='" << y0 << "' width='" << x1 - x0
                     << "' height='" << y1 - y0 << "' fill='#e8c545'/>\n";
          }
    }
    for (const auto& t : dg.transitions) {
      if (t.subgoal.size() < 2) continue;
      svg.body << "<circle cx='" << svg.px(t.subgoal[0]) << "' cy='" << svg.py(t.subgoal[1])
               << "' r='3' fill='#1f77b4' opacity='0.55'/>\n";
      svg.body << "<circle cx='" << svg.px(t.final_goal[0]) << "' cy='"
               << svg.py(t.final_goal[1]) << "' r='2.2' fill='#d62728' opacity='0.35'/>\n";
    }
    const std::string out = out_dir + "/curriculum_epoch_" + std::to_string(epoch) + ".svg";
    svg.write(out, "Subgoal curriculum at step " + std::to_string(epoch) +
                       " (blue: subgoals, red: goals)");
    written.push_back(out);
  }
  return written;
}

}  // namespace crisp::harness
