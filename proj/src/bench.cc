#include "srp/bench.h"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <thread>
#include <tuple>

#include "srp/point_csv.h"

namespace srp {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const std::pair<Method, const char*> kMethodTags[] = {
    {Method::kProcrustes, "procrustes"},
    {Method::kIrls, "irls"},
    {Method::kIrlsSrp2Init, "irls_srp2_init"},
    {Method::kSrp1, "srp1"},
    {Method::kSrp2, "srp2"},
    {Method::kSrpInf, "srpinf"},
    {Method::kNonSym, "nonsym"},
    {Method::kSrpSquared, "srp_squared"},
    {Method::kLowerBound2, "lower_bound_2"},
    {Method::kLowerBoundInf, "lower_bound_inf"},
    {Method::kGroundTruth, "ground_truth"},
};

const std::pair<ExperimentKind, const char*> kKindTags[] = {
    {ExperimentKind::kApproximationRatio, "approximation_ratio"},
    {ExperimentKind::kRecoveryNoiseless, "recovery_noiseless"},
    {ExperimentKind::kRecoveryNoisy, "recovery_noisy"},
    {ExperimentKind::kSemisupervised, "semisupervised"},
};

std::uint64_t Mix(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> SplitList(std::string_view s) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    const size_t comma = s.find(',', start);
    const auto item = Trim(s.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
T ParseNumber(std::string_view key, std::string_view text) {
  text = Trim(text);
  T v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw std::invalid_argument("config: bad value for " + std::string(key) + ": '" +
                                std::string(text) + "'");
  }
  return v;
}

bool ParseBool(std::string_view key, std::string_view text) {
  text = Trim(text);
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw std::invalid_argument("config: " + std::string(key) + " must be true or false");
}

std::vector<int> ParseIntList(std::string_view key, std::string_view text) {
  std::vector<int> out;
  for (auto item : SplitList(text)) out.push_back(ParseNumber<int>(key, item));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::string Cell(double v) { return std::isfinite(v) ? FormatDouble(v) : std::string(); }

// Lazily computed relaxations shared by the methods of one trial.
struct TrialContext {
  const ExperimentSpec& spec;
  PointPairs pts;
  RigidMotion truth;
  Matrix pool_p, pool_q;
  bool semisupervised = false;
  bool rigid = true;
  std::map<NormPower, std::pair<AlignmentResult, double>> srp;

  SolverConfig Config(NormPower p) const {
    SolverConfig cfg;
    cfg.p = p;
    cfg.use_translations = rigid;
    return cfg;
  }

  // Result and its wall time.
  const std::pair<AlignmentResult, double>& Srp(NormPower p) {
    auto it = srp.find(p);
    if (it != srp.end()) return it->second;
    const auto t0 = std::chrono::steady_clock::now();
    AlignmentResult r =
        semisupervised ? SrpSemisupervised(pts, pool_p, pool_q, spec.lambda_bar,
                                           CovarianceVariant::kSymmetric, Config(p))
        : rigid        ? SrpRigid(pts, Config(p))
                       : SrpOrth(pts, Config(p));
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return srp.emplace(p, std::make_pair(std::move(r), dt)).first->second;
  }

  // Bound attached to baseline rows: the SRP_2 relaxation, when it bounds the
  // robust energy.
  double BaselineBound() { return semisupervised ? kNaN : Srp(NormPower::kTwo).first.lower_bound; }
};

void FillFromResult(TrialRecord& rec, const AlignmentResult& r, const RigidMotion& truth) {
  rec.achieved_energy = r.achieved_energy;
  rec.lower_bound = r.lower_bound;
  rec.ratio = r.ratio;
  const RecoveryErrors e = RecoveryMetrics(r, truth);
  rec.rot_err = e.rot_err;
  rec.trans_err = e.trans_err;
  rec.converged = r.solve_report.converged;
}

struct Stats {
  int count = 0;
  double mean = 0.0, se = 0.0, max = -std::numeric_limits<double>::infinity();
};

Stats Accumulate(const std::vector<double>& values) {
  Stats s;
  double sum = 0.0;
  for (double v : values) {
    if (!std::isfinite(v)) continue;
    ++s.count;
    sum += v;
    s.max = std::max(s.max, v);
  }
  if (s.count == 0) return {0, kNaN, kNaN, kNaN};
  s.mean = sum / s.count;
  if (s.count > 1) {
    double ss = 0.0;
    for (double v : values) {
      if (std::isfinite(v)) ss += (v - s.mean) * (v - s.mean);
    }
    s.se = std::sqrt(ss / (s.count - 1)) / std::sqrt(static_cast<double>(s.count));
  }
  return s;
}

int WorkerCount(int threads) {
  if (threads > 0) return threads;
  if (const char* env = std::getenv("SRP_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

Method ParseMethod(std::string_view tag) {
  for (const auto& [m, name] : kMethodTags) {
    if (tag == name) return m;
  }
  throw std::invalid_argument("unknown method tag '" + std::string(tag) + "'");
}

std::string ToString(Method m) {
  for (const auto& [value, name] : kMethodTags) {
    if (value == m) return name;
  }
  return "?";
}

ExperimentKind ParseExperimentKind(std::string_view text) {
  for (const auto& [k, name] : kKindTags) {
    if (text == name) return k;
  }
  throw std::invalid_argument("unknown experiment kind '" + std::string(text) + "'");
}

std::string ToString(ExperimentKind k) {
  for (const auto& [value, name] : kKindTags) {
    if (value == k) return name;
  }
  return "?";
}

void ExperimentSpec::Validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("spec: " + what); };
  if (experiment_id.empty() || experiment_id.find_first_of(",\n\"") != std::string::npos) {
    fail("experiment_id must be nonempty without commas, quotes or newlines");
  }
  if (trials < 1) fail("trials must be >= 1");
  if (methods.empty()) fail("methods must be nonempty");
  if (dims.empty()) fail("dims must be nonempty");
  if (outlier_counts.empty()) fail("outlier_counts must be nonempty");
  for (int d : dims) {
    if (d < 1) fail("every dim must be >= 1");
  }
  for (int n : outlier_counts) {
    if (n < 0) fail("outlier counts must be >= 0");
  }
  if (noise.n_inliers < 0) fail("noise.n_inliers must be >= 0");
  if (!(noise.sigma >= 0) || !(noise.sigma_t >= 0)) fail("noise.sigma and noise.sigma_t must be >= 0");
  if (noise.n_inliers + *std::min_element(outlier_counts.begin(), outlier_counts.end()) < 1) {
    fail("every cell needs at least one pair");
  }
  if (kind == ExperimentKind::kRecoveryNoiseless && noise.sigma != 0) {
    fail("recovery_noiseless requires noise.sigma = 0");
  }
  if (kind == ExperimentKind::kSemisupervised) {
    if (noise.n_inliers < 1) fail("semisupervised needs noise.n_inliers >= 1");
    if (n_tilde < 2) fail("n_tilde must be >= 2");
    if (*std::max_element(outlier_counts.begin(), outlier_counts.end()) > n_tilde) {
      fail("semisupervised outlier counts must not exceed n_tilde");
    }
  }
  if (!(lambda_bar >= 0)) fail("lambda_bar must be >= 0");
  if (!(success_tol > 0)) fail("success_tol must be > 0");
  if (output_path.empty()) fail("output_path is required");
}

ExperimentSpec ParseExperimentSpec(std::istream& in) {
  ExperimentSpec spec;
  std::set<std::string> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (const size_t hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = Trim(view);
    if (view.empty()) continue;
    const size_t eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key(Trim(view.substr(0, eq)));
    const std::string_view value = Trim(view.substr(eq + 1));
    if (!seen.insert(key).second) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": repeated key " + key);
    }
    if (key == "experiment_id") {
      spec.experiment_id = value;
    } else if (key == "kind") {
      spec.kind = ParseExperimentKind(value);
    } else if (key == "dims") {
      spec.dims = ParseIntList(key, value);
    } else if (key == "outlier_counts") {
      spec.outlier_counts = ParseIntList(key, value);
    } else if (key == "trials") {
      spec.trials = ParseNumber<int>(key, value);
    } else if (key == "methods") {
      spec.methods.clear();
      for (auto tag : SplitList(value)) spec.methods.push_back(ParseMethod(tag));
      std::sort(spec.methods.begin(), spec.methods.end());
      spec.methods.erase(std::unique(spec.methods.begin(), spec.methods.end()), spec.methods.end());
    } else if (key == "noise.sigma") {
      spec.noise.sigma = ParseNumber<double>(key, value);
    } else if (key == "noise.sigma_t") {
      spec.noise.sigma_t = ParseNumber<double>(key, value);
    } else if (key == "noise.n_inliers") {
      spec.noise.n_inliers = ParseNumber<int>(key, value);
    } else if (key == "lambda_bar") {
      spec.lambda_bar = ParseNumber<double>(key, value);
    } else if (key == "seed") {
      spec.seed = ParseNumber<std::uint64_t>(key, value);
    } else if (key == "output_path") {
      spec.output_path = value;
    } else if (key == "summary_path") {
      spec.summary_path = value;
    } else if (key == "translations") {
      spec.translations = ParseBool(key, value);
    } else if (key == "n_tilde") {
      spec.n_tilde = ParseNumber<int>(key, value);
    } else if (key == "success_tol") {
      spec.success_tol = ParseNumber<double>(key, value);
    } else if (key == "timing") {
      spec.timing = ParseBool(key, value);
    } else {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": unknown key '" +
                                  key + "'");
    }
  }
  spec.Validate();
  return spec;
}

ExperimentSpec LoadExperimentSpec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file " + path);
  return ParseExperimentSpec(in);
}

std::uint64_t TrialSeed(std::uint64_t seed, int d, int n_outliers, int trial) {
  const std::uint64_t h = Mix(Mix(Mix(static_cast<std::uint64_t>(d)) ^
                                  static_cast<std::uint64_t>(n_outliers)) ^
                              static_cast<std::uint64_t>(trial));
  return seed ^ h;
}

SyntheticInstance TrialInstance(const ExperimentSpec& spec, int d, int n_outliers, int trial) {
  NoiseParams np = spec.noise;
  np.d = d;
  np.n_outliers = n_outliers;
  np.seed = TrialSeed(spec.seed, d, n_outliers, trial);
  return GenerateInstance(np);
}

std::vector<TrialRecord> RunTrial(const ExperimentSpec& spec, int d, int n_outliers, int trial) {
  const std::uint64_t seed = TrialSeed(spec.seed, d, n_outliers, trial);
  const bool semi = spec.kind == ExperimentKind::kSemisupervised;

  std::optional<TrialContext> ctx;
  if (semi) {
    SemisupervisedInstance inst = GenerateSemisupervised(d, spec.noise.n_inliers, spec.n_tilde,
                                                         n_outliers, spec.noise.sigma, seed);
    ctx.emplace(TrialContext{spec, std::move(inst.pts), std::move(inst.truth),
                             std::move(inst.unpaired_p), std::move(inst.unpaired_q), true, false, {}});
  } else {
    SyntheticInstance inst = TrialInstance(spec, d, n_outliers, trial);
    ctx.emplace(TrialContext{spec, std::move(inst.pts), std::move(inst.truth), Matrix(), Matrix(),
                             false, spec.translations, {}});
  }
  TrialContext& c = *ctx;
  const int n = c.pts.size();

  // Baseline rows carry the SRP_2 bound; solve it up front so its time is
  // not charged to whichever row asks first.
  if (!c.semisupervised) c.Srp(NormPower::kTwo);

  std::vector<TrialRecord> out;
  for (Method m : spec.methods) {
    TrialRecord rec;
    rec.experiment_id = spec.experiment_id;
    rec.trial = trial;
    rec.d = d;
    rec.n_outliers = n_outliers;
    rec.method = m;
    const auto t0 = std::chrono::steady_clock::now();
    double cached_time = kNaN;  // rows reusing a shared relaxation
    switch (m) {
      case Method::kProcrustes: {
        AlignmentResult r;
        r.motion = WeightedProcrustes(c.pts, Vector::Ones(n), c.rigid);
        r.achieved_energy = EnergyRobust(r.motion, c.pts);
        r.lower_bound = c.BaselineBound();
        r.ratio = ApproximationRatio(r.achieved_energy, r.lower_bound);
        r.solve_report.converged = true;
        FillFromResult(rec, r, c.truth);
        break;
      }
      case Method::kIrls:
      case Method::kIrlsSrp2Init: {
        IrlsOptions opt;
        opt.with_translation = c.rigid;
        opt.lower_bound = c.BaselineBound();
        if (m == Method::kIrlsSrp2Init) opt.init = c.Srp(NormPower::kTwo).first.motion;
        FillFromResult(rec, IrlsRigid(c.pts, opt), c.truth);
        break;
      }
      case Method::kSrp1:
      case Method::kSrp2:
      case Method::kSrpInf: {
        const NormPower p = m == Method::kSrp1   ? NormPower::kOne
                            : m == Method::kSrp2 ? NormPower::kTwo
                                                 : NormPower::kInf;
        const auto& [r, dt] = c.Srp(p);
        cached_time = dt;
        FillFromResult(rec, r, c.truth);
        break;
      }
      case Method::kNonSym: {
        const SolverConfig cfg = c.Config(NormPower::kTwo);
        FillFromResult(rec,
                       c.semisupervised
                           ? SrpSemisupervised(c.pts, c.pool_p, c.pool_q, spec.lambda_bar,
                                               CovarianceVariant::kNonSymmetric, cfg)
                           : NonSymPipeline(c.pts, cfg),
                       c.truth);
        break;
      }
      case Method::kSrpSquared: {
        const SolverConfig cfg = c.Config(NormPower::kTwo);
        FillFromResult(rec,
                       c.semisupervised
                           ? SrpSemisupervised(c.pts, c.pool_p, c.pool_q, spec.lambda_bar,
                                               CovarianceVariant::kSquared, cfg)
                           : SquaredPipeline(c.pts, cfg),
                       c.truth);
        break;
      }
      case Method::kLowerBound2:
      case Method::kLowerBoundInf: {
        const NormPower p = m == Method::kLowerBound2 ? NormPower::kTwo : NormPower::kInf;
        const auto& [r, dt] = c.Srp(p);
        cached_time = dt;
        rec.achieved_energy = kNaN;
        rec.lower_bound = r.lower_bound;
        rec.ratio = kNaN;
        rec.rot_err = kNaN;
        rec.trans_err = kNaN;
        rec.converged = r.solve_report.converged;
        break;
      }
      case Method::kGroundTruth: {
        AlignmentResult r;
        r.motion = c.truth;
        r.achieved_energy = EnergyRobust(c.truth, c.pts);
        r.lower_bound = c.BaselineBound();
        r.ratio = ApproximationRatio(r.achieved_energy, r.lower_bound);
        r.solve_report.converged = true;
        FillFromResult(rec, r, c.truth);
        break;
      }
    }
    rec.wall_time_s =
        std::isnan(cached_time)
            ? std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()
            : cached_time;
    out.push_back(std::move(rec));
  }
  return out;
}

ExperimentResult RunExperiment(const ExperimentSpec& spec, int threads) {
  spec.Validate();
  struct Item {
    int d, n_outliers, trial;
  };
  std::vector<Item> items;
  for (int d : spec.dims)
    for (int n_out : spec.outlier_counts)
      for (int t = 0; t < spec.trials; ++t) items.push_back({d, n_out, t});

  std::vector<std::vector<TrialRecord>> results(items.size());
  std::atomic<size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (true) {
      const size_t k = next.fetch_add(1);
      if (k >= items.size()) return;
      try {
        results[k] = RunTrial(spec, items[k].d, items[k].n_outliers, items[k].trial);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next = items.size();
      }
    }
  };
  const int workers = std::min<int>(WorkerCount(threads), static_cast<int>(items.size()));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);

  ExperimentResult out;
  for (auto& rows : results)
    for (auto& r : rows) out.records.push_back(std::move(r));
  out.summary = Summarize(spec, out.records);
  return out;
}

std::vector<SummaryRow> Summarize(const ExperimentSpec& spec,
                                  const std::vector<TrialRecord>& records) {
  std::map<std::tuple<int, int, Method>, std::vector<const TrialRecord*>> cells;
  for (const auto& r : records) cells[{r.d, r.n_outliers, r.method}].push_back(&r);

  std::vector<SummaryRow> out;
  for (const auto& [key, rows] : cells) {
    SummaryRow s;
    std::tie(s.d, s.n_outliers, s.method) = key;
    s.rows = static_cast<int>(rows.size());
    auto field = [&](double TrialRecord::*member) {
      std::vector<double> v;
      for (const auto* r : rows) v.push_back(r->*member);
      return Accumulate(v);
    };
    const Stats e = field(&TrialRecord::achieved_energy);
    const Stats lb = field(&TrialRecord::lower_bound);
    const Stats ratio = field(&TrialRecord::ratio);
    const Stats rot = field(&TrialRecord::rot_err);
    const Stats trans = field(&TrialRecord::trans_err);
    s.mean_achieved_energy = e.mean, s.se_achieved_energy = e.se;
    s.mean_lower_bound = lb.mean, s.se_lower_bound = lb.se;
    s.mean_ratio = ratio.mean, s.se_ratio = ratio.se, s.max_ratio = ratio.max;
    s.mean_rot_err = rot.mean, s.se_rot_err = rot.se;
    s.mean_trans_err = trans.mean, s.se_trans_err = trans.se;
    int success = 0, converged = 0, with_rot = 0;
    for (const auto* r : rows) {
      if (std::isfinite(r->rot_err)) {
        ++with_rot;
        if (r->rot_err <= spec.success_tol) ++success;
      }
      if (r->converged) ++converged;
    }
    s.success_rate = with_rot > 0 ? static_cast<double>(success) / with_rot : kNaN;
    s.converged_rate = static_cast<double>(converged) / s.rows;
    out.push_back(s);
  }
  return out;
}

void WriteRecordsCsv(std::ostream& out, const std::vector<TrialRecord>& records, bool timing) {
  out << "experiment_id,trial,d,n_outliers,method,achieved_energy,lower_bound,ratio,rot_err,"
         "trans_err,wall_time_s,converged\n";
  for (const auto& r : records) {
    out << r.experiment_id << ',' << r.trial << ',' << r.d << ',' << r.n_outliers << ','
        << ToString(r.method) << ',' << Cell(r.achieved_energy) << ',' << Cell(r.lower_bound)
        << ',' << Cell(r.ratio) << ',' << Cell(r.rot_err) << ',' << Cell(r.trans_err) << ','
        << (timing ? Cell(r.wall_time_s) : std::string()) << ',' << (r.converged ? 1 : 0)
        << '\n';
  }
}

void WriteSummaryCsv(std::ostream& out, const std::string& experiment_id,
                     const std::vector<SummaryRow>& summary) {
  out << "experiment_id,d,n_outliers,method,rows,mean_achieved_energy,se_achieved_energy,"
         "mean_lower_bound,se_lower_bound,mean_ratio,se_ratio,max_ratio,mean_rot_err,se_rot_err,"
         "mean_trans_err,se_trans_err,success_rate,converged_rate\n";
  for (const auto& s : summary) {
    out << experiment_id << ',' << s.d << ',' << s.n_outliers << ',' << ToString(s.method) << ','
        << s.rows << ',' << Cell(s.mean_achieved_energy) << ',' << Cell(s.se_achieved_energy)
        << ',' << Cell(s.mean_lower_bound) << ',' << Cell(s.se_lower_bound) << ','
        << Cell(s.mean_ratio) << ',' << Cell(s.se_ratio) << ',' << Cell(s.max_ratio) << ','
        << Cell(s.mean_rot_err) << ',' << Cell(s.se_rot_err) << ',' << Cell(s.mean_trans_err)
        << ',' << Cell(s.se_trans_err) << ',' << Cell(s.success_rate) << ','
        << Cell(s.converged_rate) << '\n';
  }
}

std::string SummaryPath(const ExperimentSpec& spec) {
  if (!spec.summary_path.empty()) return spec.summary_path;
  std::filesystem::path p(spec.output_path);
  if (p.extension() == ".csv") p.replace_extension();
  return p.string() + ".summary.csv";
}

ExperimentResult RunAndWrite(const ExperimentSpec& spec) {
  spec.Validate();
  const std::string summary_path = SummaryPath(spec);
  std::ofstream records_out;
  std::ofstream summary_out;
  for (const auto& [path, stream] : {std::pair{spec.output_path, &records_out},
                                     std::pair{summary_path, &summary_out}}) {
    const std::filesystem::path parent = std::filesystem::path(path).parent_path();
    std::error_code ec;
    if (!parent.empty()) std::filesystem::create_directories(parent, ec);
    stream->open(path, std::ios::out | std::ios::trunc | std::ios::binary);
    if (!*stream) throw DataError("cannot write " + path);
  }

  ExperimentResult result = RunExperiment(spec);
  WriteRecordsCsv(records_out, result.records, spec.timing);
  WriteSummaryCsv(summary_out, spec.experiment_id, result.summary);
  records_out.close();
  summary_out.close();
  if (!records_out || !summary_out) throw DataError("write failed for " + spec.output_path);
  return result;
}

}  // namespace srp
