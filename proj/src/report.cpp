#include "riccati/report.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

#include <json.hpp>

#include "riccati/errors.hpp"

namespace riccati {

namespace {

using nlohmann::json;

// JSON has no representation for inf/nan; emit null instead.
json number(double x) {
  if (!std::isfinite(x)) return nullptr;
  return x;
}

json metrics_json(const CareMetrics& m) {
  return {{"res1", number(m.res1)}, {"res2", number(m.res2)}, {"res3", number(m.res3)}};
}

json step_json(const StepRecord& s) {
  json j = {{"k", s.k},
            {"res1", number(s.res1)},
            {"res1_spectral", number(s.metrics.res1)},
            {"res2", number(s.metrics.res2)},
            {"res3", number(s.metrics.res3)},
            {"inner_iters", s.inner_iters},
            {"xi", number(s.xi)},
            {"rank", s.rank},
            {"wall_time", s.wall_time},
            {"exact_restart", s.exact_restart}};
  if (!s.closed_loop.empty()) {
    json eigs = json::array();
    for (Complex z : s.closed_loop) eigs.push_back({number(z.real()), number(z.imag())});
    j["closed_loop_eigenvalues"] = eigs;
    j["closed_loop_stable"] = s.closed_loop_stable;
  }
  if (!s.diff_eigs.empty()) {
    json eigs = json::array();
    for (double x : s.diff_eigs) eigs.push_back(number(x));
    j["difference_eigenvalues"] = eigs;
  }
  if (s.line_search) {
    const auto& ls = *s.line_search;
    json v = json::array();
    for (double x : ls.v) v.push_back(number(x));
    j["line_search"] = {{"v", v}, {"xi", number(ls.xi)}, {"accepted", ls.accepted},
                        {"fallback", ls.fallback}};
  }
  return j;
}

}  // namespace

std::string RunReport::to_json() const {
  json j = {{"name", name}, {"converged", converged}, {"total_time", total_time},
            {"steps", json::array()}, {"events", events}};
  for (const auto& s : steps) j["steps"].push_back(step_json(s));
  if (final_metrics) j["final_metrics"] = metrics_json(*final_metrics);
  return j.dump(2);
}

void RunReport::write_json(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << to_json() << '\n';
}

void RunReport::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "k,res1,xi,inner_iters,rank,wall_seconds\n";
  for (const auto& s : steps) {
    out << s.k << ',' << s.res1 << ',' << s.xi << ',' << s.inner_iters << ','
        << s.rank << ',' << s.wall_time << '\n';
  }
}

}  // namespace riccati
