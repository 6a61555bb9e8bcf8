#include "depcen/report.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace depcen {

namespace {

// Infinities and NaNs have no JSON spelling.
Json number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

Json vector_json(std::span<const double> v) {
  Json a = Json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

Json moments_json(const MomentVector& m) {
  return Json{{"p", m.p}, {"mu1", m.mu1}, {"mu2", m.mu2}, {"var1", m.var1}, {"var2", m.var2}};
}

Json model_json(const ModelSpec& model) {
  return Json{{"copula", std::string(to_string(model.copula))},
              {"marginal_t", std::string(to_string(model.family_t))},
              {"marginal_c", std::string(to_string(model.family_c))},
              {"negative_dependence", model.rotated}};
}

std::string csv_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

}  // namespace

Json marginal_json(const MarginalSpec& m) {
  Json j{{"family", std::string(to_string(m.family()))}};
  switch (m.family()) {
    case MarginalFamily::Exponential:
      j["rate"] = m.scale();
      break;
    case MarginalFamily::Weibull:
      j["shape"] = m.shape();
      j["scale"] = m.scale();
      break;
    case MarginalFamily::LogNormal:
      j["mu"] = m.mu();
      j["sigma"] = m.sigma();
      break;
  }
  return j;
}

Json theta_json(const ThetaVector& theta) {
  return Json{{"marginal_t", marginal_json(theta.t)},
              {"marginal_c", marginal_json(theta.c)},
              {"tau", theta.tau}};
}

Json options_json(const EstimatorOptions& o) {
  Json j;
  j["bag_replicates"] = o.bag_replicates;
  j["budget"] = o.budget;
  j["weight_replicates"] = o.weight_replicates;
  j["inner_weight_replicates"] = o.inner_weight_replicates;
  j["engine"] = o.engine ? Json(std::string(to_string(*o.engine))) : Json("auto");
  j["region_fits_per_tau"] = o.region.fits_per_tau;
  j["region_taus"] = o.region.representative_taus;
  j["anneal"] = Json{{"visiting_param", o.anneal.visiting_param},
                     {"acceptance_param", o.anneal.acceptance_param},
                     {"initial_temp", o.anneal.initial_temp}};
  j["local_max_iterations"] = o.local.max_iterations;
  j["local_f_tolerance"] = o.local.f_tolerance;
  j["negative_dependence"] = o.negative_dependence;
  return j;
}

Json estimate_json(const EstimateReport& r, const EstimatorOptions& options) {
  Json j;
  j["method"] = "gmm";
  j["model"] = model_json(r.model);
  j["theta_hat"] = theta_json(r.theta_hat);
  j["voted_range"] = Json{{"label", std::string(to_string(r.voted_range.label))},
                          {"lo", r.voted_range.lo},
                          {"hi", r.voted_range.hi}};
  Json ranges = Json::array();
  const auto& canon = canonical_ranges();
  for (std::size_t k = 0; k < 4; ++k) {
    const auto& rt = r.tally.ranges[k];
    ranges.push_back(Json{{"label", std::string(to_string(canon[k].label))},
                          {"votes", rt.votes},
                          {"best_q", number(rt.best_q)},
                          {"mean_q", number(rt.mean_q)}});
  }
  j["tally"] = Json{{"replicates", r.tally.replicates}, {"skipped", r.tally.skipped}, {"ranges", ranges}};
  j["q_start"] = number(r.q_start);
  j["q_final"] = number(r.q_final);
  j["local_iterations"] = r.local_iterations;
  j["converged"] = r.converged;
  j["engine"] = std::string(to_string(r.engine));
  j["region"] = Json{{"lower", vector_json(r.region.lower)}, {"upper", vector_json(r.region.upper)}};
  j["sample_moments"] = moments_json(r.sample);
  j["weights"] = vector_json(r.weights.diag);
  j["seed"] = r.seed;
  j["options"] = options_json(options);
  return j;
}

Json mle_json(const MleFit& fit, const ModelSpec& model, std::uint64_t seed) {
  Json j;
  j["method"] = "mle";
  j["model"] = model_json(model);
  j["theta_hat"] = theta_json(fit.theta_hat);
  j["log_likelihood"] = number(fit.log_likelihood);
  j["iterations"] = fit.iterations;
  j["converged"] = fit.converged;
  j["seed"] = seed;
  return j;
}

Json bootstrap_json(const BootstrapSummary& s) {
  Json j;
  j["point_estimate"] = s.point_estimate;
  j["se"] = s.se;
  j["ci_lo"] = s.ci_lo;
  j["ci_hi"] = s.ci_hi;
  j["B"] = s.B;
  j["alpha"] = s.alpha;
  j["lo_rank"] = s.lo_rank;
  j["hi_rank"] = s.hi_rank;
  j["failures"] = s.failures;
  j["mae"] = s.mae ? Json(*s.mae) : Json(nullptr);
  j["estimates"] = vector_json(s.estimates);
  return j;
}

Json study_json(std::span<const StudySummary> summaries, const StudyConfig& config) {
  Json cells = Json::array();
  for (const auto& s : summaries) {
    Json runs = Json::array();
    for (const auto& r : s.records) {
      Json rj{{"run", r.run}, {"ok", r.ok}};
      if (r.ok) {
        rj["estimate"] = r.estimate;
        rj["se"] = r.se;
        rj["ci_lo"] = r.ci_lo;
        rj["ci_hi"] = r.ci_hi;
        rj["covered"] = r.covered;
        rj["bootstrap_mae"] = r.bootstrap_mae;
        rj["event_fraction"] = r.event_fraction;
      } else {
        rj["error"] = r.error;
      }
      runs.push_back(std::move(rj));
    }
    Json cj;
    cj["name"] = s.cell.name;
    cj["method"] = std::string(to_string(s.cell.method));
    cj["copula"] = std::string(to_string(s.cell.copula));
    cj["true_tau"] = s.cell.tau;
    cj["marginal_t"] = marginal_json(s.cell.marginal_t);
    cj["marginal_c"] = marginal_json(s.cell.marginal_c);
    cj["n"] = s.cell.n;
    cj["runs"] = s.runs;
    cj["failed_runs"] = s.failed_runs;
    cj["failed"] = s.failed;
    cj["mean_estimate"] = s.mean_estimate;
    cj["mae"] = s.mae;
    cj["empirical_se"] = s.empirical_se;
    cj["coverage_percent"] = s.coverage_percent;
    cj["mpe"] = s.mpe ? Json(*s.mpe) : Json(nullptr);
    cj["mean_bootstrap_se"] = s.mean_bootstrap_se;
    cj["records"] = std::move(runs);
    cells.push_back(std::move(cj));
  }
  Json j;
  j["runs"] = config.runs;
  j["inner_B"] = config.inner_B;
  j["alpha"] = config.alpha;
  j["seed"] = config.seed;
  j["point_options"] = options_json(config.point_options);
  j["bootstrap_options"] = options_json(config.bootstrap_options);
  j["cells"] = std::move(cells);
  return j;
}

void write_study_csv(std::ostream& out, std::span<const StudySummary> summaries) {
  out << "cell,method,copula,marginal_t,marginal_c,n,true_tau,runs,failed_runs,mean_estimate,mae,"
         "empirical_se,cp,mpe,mean_bootstrap_se\n";
  for (const auto& s : summaries) {
    out << s.cell.name << ',' << to_string(s.cell.method) << ',' << to_string(s.cell.copula) << ','
        << '"' << s.cell.marginal_t.describe() << '"' << ',' << '"' << s.cell.marginal_c.describe()
        << '"' << ',' << s.cell.n << ',' << csv_number(s.cell.tau) << ',' << s.runs << ','
        << s.failed_runs << ',' << csv_number(s.mean_estimate) << ',' << csv_number(s.mae) << ','
        << csv_number(s.empirical_se) << ',' << csv_number(s.coverage_percent) << ','
        << (s.mpe ? csv_number(*s.mpe) : std::string()) << ',' << csv_number(s.mean_bootstrap_se)
        << '\n';
  }
}

void write_single_dataset_csv(std::ostream& out, std::span<const StudySummary> summaries) {
  out << "cell,method,copula,marginal_t,marginal_c,n,true_tau,point_estimate,bootstrap_mae,"
         "bootstrap_se,ci_lo,ci_hi\n";
  for (const auto& s : summaries) {
    out << s.cell.name << ',' << to_string(s.cell.method) << ',' << to_string(s.cell.copula) << ','
        << '"' << s.cell.marginal_t.describe() << '"' << ',' << '"' << s.cell.marginal_c.describe()
        << '"' << ',' << s.cell.n << ',' << csv_number(s.cell.tau);
    if (!s.records.empty() && s.records.front().ok) {
      const auto& r = s.records.front();
      out << ',' << csv_number(r.estimate) << ',' << csv_number(r.bootstrap_mae) << ','
          << csv_number(r.se) << ',' << csv_number(r.ci_lo) << ',' << csv_number(r.ci_hi);
    } else {
      out << ",,,,,";
    }
    out << '\n';
  }
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace depcen
