#include "mvldp/models.hpp"
#include "mvldp/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace mvldp {

const HypothesisResult& AuditReport::at(const std::string& name) const {
    for (const auto& r : results) {
        if (r.name == name) {
            return r;
        }
    }
    throw InvalidInput("audit report has no entry '" + name + "'");
}

bool AuditReport::all_pass() const {
    return std::all_of(results.begin(), results.end(), [](const auto& r) { return r.pass; });
}

State sample_state(const SpaceSpec& space, const SamplerSpec& sampler, std::uint64_t seed,
                   std::uint64_t index) {
    rng::Stream stream(seed, index);
    const double log_lo = std::log(sampler.amplitude_min);
    const double log_hi = std::log(sampler.amplitude_max);
    const double amp = std::exp(stream.uniform(log_lo, log_hi));
    State u(space.dim());
    switch (space.kind()) {
    case SpaceKind::euclidean:
        for (Eigen::Index i = 0; i < u.size(); ++i) {
            u[i] = amp * stream.normal();
        }
        break;
    case SpaceKind::spectral_dirichlet:
        for (Eigen::Index k = 0; k < u.size(); ++k) {
            u[k] = amp * stream.normal() / static_cast<double>(k + 1);
        }
        break;
    case SpaceKind::grid_dirichlet: {
        const Eigen::ArrayXd x = space.abscissae().array();
        u.setZero();
        for (Eigen::Index k = 1; k <= sampler.smooth_modes; ++k) {
            const double xi = stream.normal();
            u.array() += amp * xi / static_cast<double>(k) *
                         (static_cast<double>(k) * std::numbers::pi * x).sin();
        }
        break;
    }
    }
    return u;
}

namespace {

/// One sample of a hypothesis of the form  lhs <= C * rhs.
struct Sample {
    double lhs;
    double rhs;
    double scale;  // magnitude of the terms entering lhs, for relative defects
};

HypothesisResult evaluate(const std::string& name, const std::vector<Sample>& samples,
                          const AuditOptions& options) {
    HypothesisResult out;
    out.name = name;
    double fitted = 0.0;
    for (const auto& s : samples) {
        if (s.rhs > 0.0) {
            fitted = std::max(fitted, s.lhs / s.rhs);
        }
    }
    out.constant = fitted;
    const double admitted = std::min(fitted, options.max_constant);
    double defect = -std::numeric_limits<double>::infinity();
    for (const auto& s : samples) {
        const double bound = admitted * s.rhs;
        const double scale = std::max({s.scale, bound, std::numeric_limits<double>::min()});
        defect = std::max(defect, (s.lhs - bound) / scale);
    }
    out.defect = samples.empty() ? 0.0 : defect;
    out.pass = out.defect <= options.tolerance;
    return out;
}

Ensemble sample_ensemble(const SpaceSpec& space, const AuditOptions& options, std::uint64_t tag) {
    const Eigen::Index n = options.sampler.ensemble_size;
    Ensemble::Matrix pts(space.dim(), n);
    for (Eigen::Index i = 0; i < n; ++i) {
        pts.col(i) = sample_state(space, options.sampler, rng::derive_seed(options.seed, "audit-ensemble", tag),
                                  static_cast<std::uint64_t>(i));
    }
    return Ensemble(std::move(pts));
}

double diffusion_gap_sq(const ModelSpec& model, const Eigen::VectorXd& s1, const Eigen::VectorXd& s2) {
    double total = 0.0;
    for (Eigen::Index j = 0; j < model.noise_rank(); ++j) {
        const double d = s1[j] - s2[j];
        total += d * d * h_norm_sq(model.channels[static_cast<std::size_t>(j)].direction, model.space);
    }
    return total;
}

}  // namespace

AuditReport audit_hypotheses(const ModelSpec& model, const AuditOptions& options) {
    model.validate();
    require(options.trials >= 1, "audit: trials must be >= 1");
    require(options.sampler.amplitude_min > 0.0 &&
                options.sampler.amplitude_max >= options.sampler.amplitude_min,
            "audit: invalid amplitude range");
    require(options.sampler.ensemble_size >= 1, "audit: ensemble size must be >= 1");

    const SpaceSpec& space = model.space;
    const double alpha = model.alpha;
    const double eta = 1e-12;
    rng::Stream times(rng::derive_seed(options.seed, "audit-times", 0));
    const std::uint64_t state_seed = rng::derive_seed(options.seed, "audit-states", 0);

    std::vector<Sample> h1, h2, h3, h3b, h4, h5;
    for (std::size_t trial = 0; trial < options.trials; ++trial) {
        const std::uint64_t k = 4 * static_cast<std::uint64_t>(trial);
        const double t = times.uniform(0.0, options.sampler.horizon);
        const double s = times.uniform(0.0, options.sampler.horizon);
        const State u = sample_state(space, options.sampler, state_seed, k);
        const State v = sample_state(space, options.sampler, state_seed, k + 1);
        const State w = sample_state(space, options.sampler, state_seed, k + 2);
        const Ensemble mu = sample_ensemble(space, options, 2 * trial);
        const Ensemble nu = sample_ensemble(space, options, 2 * trial + 1);
        const LawMoments mu_m = moments(mu, space);
        const LawMoments nu_m = moments(nu, space);

        const State a_u = drift(model, t, u, mu_m);
        const State a_v = drift(model, t, v, nu_m);

        // H1: response of <A(u, mu), v> to a perturbation of size eta in (u, mu).
        {
            const Ensemble mu_shift(mu.points().colwise() + eta * w);
            const State a_pert = drift(model, t, u + eta * w, moments(mu_shift, space));
            const double diff = std::abs(dual_pair(a_pert, v, space) - dual_pair(a_u, v, space));
            h1.push_back({diff, 0.0, dual_pair_scale(a_u, v, space)});
        }

        // H2: 2<A(u,mu),u> + ||B||^2 + theta ||u||_V^alpha <= C (||u||^2 + mu(||.||^2) + 1).
        {
            const double pair = dual_pair(a_u, u, space);
            const double hs = hs_norm_sq(model, t, u, mu_m);
            const double coercive = model.theta * std::pow(v_norm(u, space), alpha);
            h2.push_back({2.0 * pair + hs + coercive, h_norm_sq(u, space) + mu_m.second_moment + 1.0,
                          2.0 * dual_pair_scale(a_u, u, space) + hs + coercive});
        }

        // H3: monotonicity of A and Lipschitz continuity of B.
        {
            const State diff = u - v;
            const double w2_sq = std::pow(w2(mu, nu, space), 2);
            const double rhs = h_norm_sq(diff, space) + w2_sq;
            const double mono = 2.0 * dual_pair(State(a_u - a_v), diff, space);
            const double mono_scale =
                2.0 * (dual_pair_scale(a_u, diff, space) + dual_pair_scale(a_v, diff, space));
            h3.push_back({mono, rhs, mono_scale});

            const Eigen::VectorXd su = gains(model, t, u, mu_m);
            const Eigen::VectorXd sv = gains(model, t, v, nu_m);
            const double lip = diffusion_gap_sq(model, su, sv);
            const double lip_scale = hs_norm_sq(model, t, u, mu_m) + hs_norm_sq(model, t, v, nu_m);
            h3b.push_back({lip, rhs, lip_scale});
        }

        // H4: ||A||_{V*}^{alpha/(alpha-1)} <= C (1 + ||u||_V^alpha + mu(||.||^2)).
        {
            const double lhs = std::pow(v_star_norm(a_u, space), alpha / (alpha - 1.0));
            h4.push_back({lhs, 1.0 + std::pow(v_norm(u, space), alpha) + mu_m.second_moment, lhs});
        }

        // H5: ||B(t,u,mu) - B(s,u,mu)|| <= C (1 + ||u|| + sqrt(mu(||.||^2))) |t - s|^gamma.
        if (model.hoelder_gamma > 0.0 && t != s) {
            const Eigen::VectorXd st = gains(model, t, u, mu_m);
            const Eigen::VectorXd ss = gains(model, s, u, mu_m);
            const double lhs = std::sqrt(diffusion_gap_sq(model, st, ss));
            const double rhs = (1.0 + h_norm(u, space) + std::sqrt(mu_m.second_moment)) *
                               std::pow(std::abs(t - s), model.hoelder_gamma);
            const double scale =
                std::sqrt(hs_norm_sq(model, t, u, mu_m)) + std::sqrt(hs_norm_sq(model, s, u, mu_m));
            h5.push_back({lhs, rhs, scale});
        } else {
            h5.push_back({0.0, 1.0, 0.0});
        }
    }

    AuditReport report;
    {
        // Demicontinuity has no constant: the defect is the relative response.
        HypothesisResult r;
        r.name = "H1";
        for (const auto& smp : h1) {
            r.defect = std::max(r.defect, smp.lhs / std::max(smp.scale, 1e-300));
        }
        r.constant = r.defect / eta;
        r.pass = r.defect <= options.tolerance;
        report.results.push_back(r);
    }
    report.results.push_back(evaluate("H2", h2, options));
    report.results.push_back(evaluate("H3", h3, options));
    report.results.push_back(evaluate("H3_diffusion", h3b, options));
    report.results.push_back(evaluate("H4", h4, options));
    report.results.push_back(evaluate("H5", h5, options));
    return report;
}

}  // namespace mvldp
