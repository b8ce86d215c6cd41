// bench: experiment runner and one-shot alignment tool.
//
//   bench run --config <file>
//   bench align --input <csv> --method <tag> [--p 1|2|inf] [--lambda-bar r] [--orthogonal]
//   bench dipcheck --input <csv> --inliers <idx-list> [--probes k] [--refine k] [--seed s]
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 solver did not converge.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "srp/bench.h"
#include "srp/point_csv.h"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNotConverged = 3;

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

std::string Fmt(double v) { return std::isfinite(v) ? srp::FormatDouble(v) : "nan"; }

// "0-4,7,9-10" -> {0,1,2,3,4,7,9,10}
std::vector<int> ParseIndexList(const std::string& text, int n) {
  std::vector<int> out;
  std::string_view rest = text;
  auto number = [&](std::string_view s) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty() || v < 0) {
      throw UsageError("bad inlier index '" + std::string(s) + "'");
    }
    return v;
  };
  while (!rest.empty()) {
    const size_t comma = rest.find(',');
    const std::string_view item = rest.substr(0, comma);
    rest = comma == std::string_view::npos ? std::string_view() : rest.substr(comma + 1);
    if (item.empty()) continue;
    const size_t dash = item.find('-');
    const int lo = number(item.substr(0, dash));
    const int hi = dash == std::string_view::npos ? lo : number(item.substr(dash + 1));
    if (hi < lo) throw UsageError("empty inlier range '" + std::string(item) + "'");
    for (int i = lo; i <= hi; ++i) out.push_back(i);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  if (!out.empty() && out.back() >= n) {
    throw srp::DataError("inlier index " + std::to_string(out.back()) + " out of range for " +
                         std::to_string(n) + " pairs");
  }
  return out;
}

void PrintMotion(const srp::AlignmentResult& r) {
  const int d = static_cast<int>(r.motion.rotation.rows());
  std::cout << "method " << r.method << '\n' << "rotation\n";
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) std::cout << (j ? " " : "") << Fmt(r.motion.rotation(i, j));
    std::cout << '\n';
  }
  std::cout << "translation\n";
  for (int i = 0; i < d; ++i) std::cout << (i ? " " : "") << Fmt(r.motion.translation(i));
  std::cout << '\n';
  std::cout << "achieved_energy " << Fmt(r.achieved_energy) << '\n'
            << "lower_bound " << Fmt(r.lower_bound) << '\n'
            << "ratio " << Fmt(r.ratio) << '\n'
            << "converged " << (r.solve_report.converged ? 1 : 0) << '\n';
}

int RunCommand(const std::string& config_path) {
  const srp::ExperimentSpec spec = srp::LoadExperimentSpec(config_path);
  const srp::ExperimentResult result = srp::RunAndWrite(spec);
  int not_converged = 0;
  for (const auto& r : result.records) not_converged += r.converged ? 0 : 1;
  std::cerr << "wrote " << result.records.size() << " rows to " << spec.output_path
            << " and the summary to " << srp::SummaryPath(spec) << '\n';
  if (not_converged > 0) {
    std::cerr << not_converged << " rows did not converge\n";
    return kExitNotConverged;
  }
  return 0;
}

int AlignCommand(const std::string& input, std::string method, const std::optional<std::string>& p_text,
                 const std::optional<double>& lambda_bar, bool orthogonal) {
  std::optional<srp::NormPower> p;
  if (p_text) {
    try {
      p = srp::ParseNormPower(*p_text);
    } catch (const std::invalid_argument&) {
      throw UsageError("--p must be 1, 2 or inf");
    }
  }
  if (method == "srp") method = "srp" + srp::ToString(p.value_or(srp::NormPower::kTwo));
  srp::Method m;
  try {
    m = srp::ParseMethod(method);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const bool is_srp = m == srp::Method::kSrp1 || m == srp::Method::kSrp2 || m == srp::Method::kSrpInf;
  if (is_srp && p && "srp" + srp::ToString(*p) != method) {
    throw UsageError("--p " + *p_text + " contradicts --method " + method);
  }
  if (m == srp::Method::kLowerBound2 || m == srp::Method::kLowerBoundInf ||
      m == srp::Method::kGroundTruth) {
    throw UsageError("method " + method + " needs a generated instance; use bench run");
  }
  if (lambda_bar && !(*lambda_bar >= 0)) throw UsageError("--lambda-bar must be >= 0");

  const srp::PointSetFile file = srp::ReadPointCsvFile(input);
  const srp::PointPairs pts(file.p, file.q);
  const bool semi = lambda_bar.has_value();
  if (semi && !file.has_pools()) {
    throw srp::DataError("--lambda-bar needs ptilde and qtilde rows in the input");
  }
  const bool rigid = !orthogonal && !semi;

  srp::SolverConfig cfg;
  cfg.p = m == srp::Method::kSrp1   ? srp::NormPower::kOne
          : m == srp::Method::kSrpInf ? srp::NormPower::kInf
                                      : srp::NormPower::kTwo;
  cfg.use_translations = rigid;

  srp::AlignmentResult r;
  switch (m) {
    case srp::Method::kProcrustes:
      r.motion = srp::WeightedProcrustes(pts, srp::Vector::Ones(pts.size()), rigid);
      r.achieved_energy = srp::EnergyRobust(r.motion, pts);
      r.lower_bound = std::numeric_limits<double>::quiet_NaN();
      r.ratio = r.lower_bound;
      r.method = "procrustes";
      r.solve_report.converged = true;
      break;
    case srp::Method::kIrls:
    case srp::Method::kIrlsSrp2Init: {
      srp::IrlsOptions opt;
      opt.with_translation = rigid;
      opt.lower_bound = std::numeric_limits<double>::quiet_NaN();
      if (m == srp::Method::kIrlsSrp2Init) {
        const srp::AlignmentResult init = rigid ? srp::SrpRigid(pts, cfg) : srp::SrpOrth(pts, cfg);
        opt.init = init.motion;
        opt.lower_bound = init.lower_bound;
      }
      r = srp::IrlsRigid(pts, opt);
      break;
    }
    case srp::Method::kNonSym:
      r = semi ? srp::SrpSemisupervised(pts, file.ptilde, file.qtilde, *lambda_bar,
                                        srp::CovarianceVariant::kNonSymmetric, cfg)
               : srp::NonSymPipeline(pts, cfg);
      break;
    case srp::Method::kSrpSquared:
      r = semi ? srp::SrpSemisupervised(pts, file.ptilde, file.qtilde, *lambda_bar,
                                        srp::CovarianceVariant::kSquared, cfg)
               : srp::SquaredPipeline(pts, cfg);
      break;
    default:
      r = semi    ? srp::SrpSemisupervised(pts, file.ptilde, file.qtilde, *lambda_bar,
                                           srp::CovarianceVariant::kSymmetric, cfg)
          : rigid ? srp::SrpRigid(pts, cfg)
                  : srp::SrpOrth(pts, cfg);
      break;
  }
  PrintMotion(r);
  if (!r.solve_report.converged) {
    std::cerr << "solver did not reach its tolerance\n";
    return kExitNotConverged;
  }
  return 0;
}

void PrintDip(const char* name, const srp::DipReport& rep, bool affine) {
  std::cout << name << " holds_sampled " << (rep.holds_sampled ? 1 : 0) << '\n'
            << name << " min_margin " << Fmt(rep.min_margin) << '\n'
            << name << " probes " << rep.probes << '\n'
            << name << " worst_direction";
  for (Eigen::Index i = 0; i < rep.worst_direction.size(); ++i) {
    std::cout << ' ' << Fmt(rep.worst_direction(i));
  }
  std::cout << '\n';
  if (affine) std::cout << name << " worst_offset " << Fmt(rep.worst_offset) << '\n';
}

int DipCommand(const std::string& input, const std::string& inliers, int probes, int refine,
               std::uint64_t seed) {
  if (probes < 1) throw UsageError("--probes must be >= 1");
  if (refine < 0) throw UsageError("--refine must be >= 0");
  const srp::PointSetFile file = srp::ReadPointCsvFile(input);
  const srp::PointPairs pts(file.p, file.q);
  const std::vector<int> set = ParseIndexList(inliers, pts.size());
  PrintDip("linear", srp::CheckLinearDip(pts, set, probes, refine, seed), false);
  PrintDip("affine", srp::CheckAffineDip(pts, set, probes, refine, seed), true);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Symmetrized relax-and-project alignment benchmarks"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run an experiment described by a config file");
  run->add_option("--config", config_path, "Experiment config (key=value)")->required();

  std::string input, method, inliers;
  std::optional<std::string> p_text;
  std::optional<double> lambda_bar;
  bool orthogonal = false;
  auto* align = app.add_subcommand("align", "Align the p/q pairs of a point CSV");
  align->add_option("--input", input, "Point CSV")->required();
  align->add_option("--method", method,
                    "procrustes, irls, irls_srp2_init, srp, srp1, srp2, srpinf, nonsym, srp_squared")
      ->required();
  align->add_option("--p", p_text, "Norm power for --method srp: 1, 2 or inf");
  align->add_option("--lambda-bar", lambda_bar,
                    "Covariance weight; uses the ptilde/qtilde pools, t = 0");
  align->add_flag("--orthogonal", orthogonal, "Fit R only (t = 0)");

  int probes = 2000, refine = 200;
  std::uint64_t seed = 0;
  auto* dip = app.add_subcommand("dipcheck", "Sampled DIP check for a given inlier set");
  dip->add_option("--input", input, "Point CSV")->required();
  dip->add_option("--inliers", inliers, "Inlier indices, e.g. 0-199,205")->required();
  dip->add_option("--probes", probes, "Random directions")->capture_default_str();
  dip->add_option("--refine", refine, "Refinement steps from the worst probe")->capture_default_str();
  dip->add_option("--seed", seed, "Probe seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kExitUsage;
  }

  try {
    if (*run) return RunCommand(config_path);
    if (*align) return AlignCommand(input, method, p_text, lambda_bar, orthogonal);
    return DipCommand(input, inliers, probes, refine, seed);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  } catch (const srp::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const srp::DimensionError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::invalid_argument& e) {
    // Config and spec problems.
    std::cerr << "error: " << e.what() << "\n\n" << (*run ? run->help() : app.help());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
}
