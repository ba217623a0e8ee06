#pragma once

// Coefficient families (A, B) for the three model classes:
//
//   mvsde         V = H = R^d,        A(t,u,mu) = a u + b mean(mu)
//   porous_media  V = L^r, H = W^{-1,2},  A(t,u,mu) = Laplacian Psi(u, mu),
//                 Psi(u, mu) = |u|^{r-2} u + kappa mu(||.||_H^2) u
//   p_laplace     V = W_0^{1,p}, H = L^2, A(t,u,mu) = div(|grad u|^{p-2} grad u) + F,
//                 F(t,u,mu) = c0 + c1 u + c2 (node average of mean(mu))
//
// The diffusion is finite rank: B(t,u,mu) w = sum_j s_j(t,u,mu) w_j f_j with
// scalar gains s_j = c(t) (beta0_j + beta1_j <u, f_j>_H + beta2_j sqrt(mu(||.||_H^2))),
// c(t) = 1 + t^gamma when a Hoelder exponent gamma > 0 is set, else 1.

#include "mvldp/measure.hpp"
#include "mvldp/spaces.hpp"
#include "mvldp/types.hpp"

#include <string>
#include <vector>

namespace mvldp {

enum class ModelFamily { mvsde, porous_media, p_laplace };

std::string to_string(ModelFamily family);
ModelFamily parse_family(const std::string& name);

struct NoiseChannel {
    State direction;  // f_j in H
    double beta0 = 0.0;
    double beta1 = 0.0;
    double beta2 = 0.0;
};

struct ModelSpec {
    ModelFamily family = ModelFamily::mvsde;
    SpaceSpec space = SpaceSpec::euclidean(1);
    double alpha = 2.0;  // coercivity exponent
    double theta = 1.0;  // coercivity constant

    // mvsde
    double a = -1.0;
    double b_mean = 0.5;

    // porous_media: exponent r is space.v_exponent()
    double kappa = 0.1;

    // p_laplace: exponent p is space.v_exponent()
    double c0 = 0.1;
    double c1 = 0.5;
    double c2 = 0.25;

    std::vector<NoiseChannel> channels;
    double hoelder_gamma = 0.0;

    Eigen::Index dim() const noexcept { return space.dim(); }
    Eigen::Index noise_rank() const noexcept { return static_cast<Eigen::Index>(channels.size()); }

    /// Throws InvalidInput when the parameters break the coefficient contract.
    void validate() const;
};

/// Default channel direction f_j: axis e_j (euclidean), sine mode j+1
/// coefficient vector (spectral), nodal sqrt(2) sin((j+1) pi x) (grid).
State default_channel_direction(const SpaceSpec& space, Eigen::Index j);

/// Appends `rank` channels along the default directions with shared gains.
void add_channels(ModelSpec& model, Eigen::Index rank, double beta0, double beta1 = 0.0,
                  double beta2 = 0.0);

ModelSpec make_mvsde(Eigen::Index dim, double a, double b_mean, double sigma);
ModelSpec make_porous_media(Eigen::Index modes, double r, double kappa);
ModelSpec make_p_laplace(Eigen::Index nodes, double p, double c0, double c1, double c2);

/// The functionals of a measure that the coefficients depend on.
struct LawMoments {
    State mean;
    double second_moment = 0.0;
};

LawMoments moments(const Ensemble& law, const SpaceSpec& space);

struct DriftEvaluation {
    State value;
    /// Explicit-Euler stiffness estimate: dt * stiffness must stay <= 1.
    double stiffness = 0.0;
};

DriftEvaluation evaluate_drift(const ModelSpec& model, double t, const State& u,
                               const LawMoments& law);

State drift(const ModelSpec& model, double t, const State& u, const LawMoments& law);
State drift(const ModelSpec& model, double t, const State& u, const Ensemble& law);

double time_factor(const ModelSpec& model, double t);

/// Channel gains s_j(t, u, mu).
Eigen::VectorXd gains(const ModelSpec& model, double t, const State& u, const LawMoments& law);

State apply_diffusion(const ModelSpec& model, double t, const State& u, const LawMoments& law,
                      const Eigen::Ref<const Eigen::VectorXd>& w);
State apply_diffusion(const ModelSpec& model, double t, const State& u, const Ensemble& law,
                      const Eigen::Ref<const Eigen::VectorXd>& w);

/// ||B(t,u,mu)||^2_{L_2(U,H)} = sum_j s_j^2 ||f_j||_H^2.
double hs_norm_sq(const ModelSpec& model, double t, const State& u, const LawMoments& law);
double hs_norm_sq(const ModelSpec& model, double t, const State& u, const Ensemble& law);

/// (d drift / du)^T y with the law held fixed.
State drift_vjp(const ModelSpec& model, double t, const State& u, const LawMoments& law,
                const State& y);

/// (d (B(t,u,mu) w) / du)^T y with the law held fixed.
State diffusion_vjp(const ModelSpec& model, double t, const State& u, const LawMoments& law,
                    const Eigen::Ref<const Eigen::VectorXd>& w, const State& y);

// ---------------------------------------------------------------------------
// Hypothesis audit

struct SamplerSpec {
    double amplitude_min = 0.1;  // log-uniform amplitude range of sampled states
    double amplitude_max = 2.0;
    Eigen::Index ensemble_size = 8;
    Eigen::Index smooth_modes = 8;  // sine modes used for grid-space samples
    double horizon = 1.0;           // times are drawn from [0, horizon]
};

struct AuditOptions {
    std::size_t trials = 500;
    std::uint64_t seed = 1;
    double tolerance = 1e-9;
    /// Largest admissible constant C; a fitted constant above it fails.
    double max_constant = 100.0;
    SamplerSpec sampler;
};

struct HypothesisResult {
    std::string name;
    double constant = 0.0;  // worst-case empirical constant
    double defect = 0.0;    // max relative defect at the admitted constant
    bool pass = false;
};

struct AuditReport {
    std::vector<HypothesisResult> results;

    const HypothesisResult& at(const std::string& name) const;
    bool all_pass() const;
};

/// Random state with the sampler's amplitude law.
State sample_state(const SpaceSpec& space, const SamplerSpec& sampler, std::uint64_t seed,
                   std::uint64_t index);

/// Audits H1 (demicontinuity), H2 (coercivity), H3 (monotonicity of A and
/// Lipschitz continuity of B, reported as H3 and H3_diffusion), H4 (growth)
/// and H5 (time Hoelder continuity of B) on random samples.
AuditReport audit_hypotheses(const ModelSpec& model, const AuditOptions& options);

}  // namespace mvldp
