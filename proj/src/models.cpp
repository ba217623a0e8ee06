#include "mvldp/models.hpp"

#include <cmath>
#include <numbers>

namespace mvldp {

std::string to_string(ModelFamily family) {
    switch (family) {
    case ModelFamily::mvsde: return "mvsde";
    case ModelFamily::porous_media: return "porous_media";
    case ModelFamily::p_laplace: return "p_laplace";
    }
    return "unknown";
}

ModelFamily parse_family(const std::string& name) {
    if (name == "mvsde") return ModelFamily::mvsde;
    if (name == "porous_media") return ModelFamily::porous_media;
    if (name == "p_laplace") return ModelFamily::p_laplace;
    throw InvalidInput("unknown model family '" + name + "'");
}

void ModelSpec::validate() const {
    require(theta > 0.0, "model: theta must be positive");
    require(alpha > 1.0, "model: alpha must exceed 1");
    require(hoelder_gamma >= 0.0 && hoelder_gamma <= 1.0, "model: hoelder_gamma must lie in [0, 1]");
    switch (family) {
    case ModelFamily::mvsde:
        require(space.kind() == SpaceKind::euclidean, "mvsde requires a euclidean space");
        break;
    case ModelFamily::porous_media:
        require(space.kind() == SpaceKind::spectral_dirichlet,
                "porous_media requires a spectral_dirichlet space");
        require(space.v_exponent() >= 2.0, "porous_media requires r >= 2");
        require(kappa >= 0.0, "porous_media requires kappa >= 0");
        break;
    case ModelFamily::p_laplace:
        require(space.kind() == SpaceKind::grid_dirichlet, "p_laplace requires a grid_dirichlet space");
        require(space.v_exponent() >= 2.0, "p_laplace requires p >= 2");
        break;
    }
    for (const auto& ch : channels) {
        space.check_dim(ch.direction.size(), "noise channel");
        require(ch.direction.allFinite(), "noise channel direction must be finite");
    }
}

State default_channel_direction(const SpaceSpec& space, Eigen::Index j) {
    require(j >= 0 && j < space.dim(), "noise rank cannot exceed the state dimension");
    if (space.kind() == SpaceKind::grid_dirichlet) {
        const Eigen::VectorXd x = space.abscissae();
        return (std::numbers::sqrt2 *
                (static_cast<double>(j + 1) * std::numbers::pi * x.array()).sin())
            .matrix();
    }
    return State::Unit(space.dim(), j);
}

void add_channels(ModelSpec& model, Eigen::Index rank, double beta0, double beta1, double beta2) {
    for (Eigen::Index j = 0; j < rank; ++j) {
        model.channels.push_back(
            {default_channel_direction(model.space, model.noise_rank()), beta0, beta1, beta2});
    }
}

ModelSpec make_mvsde(Eigen::Index dim, double a, double b_mean, double sigma) {
    ModelSpec m;
    m.family = ModelFamily::mvsde;
    m.space = SpaceSpec::euclidean(dim);
    m.alpha = 2.0;
    m.theta = 1.0;
    m.a = a;
    m.b_mean = b_mean;
    add_channels(m, dim, sigma);
    return m;
}

ModelSpec make_porous_media(Eigen::Index modes, double r, double kappa) {
    ModelSpec m;
    m.family = ModelFamily::porous_media;
    m.space = SpaceSpec::spectral_dirichlet(modes, r);
    m.alpha = r;
    m.theta = 2.0;
    m.kappa = kappa;
    return m;
}

ModelSpec make_p_laplace(Eigen::Index nodes, double p, double c0, double c1, double c2) {
    ModelSpec m;
    m.family = ModelFamily::p_laplace;
    m.space = SpaceSpec::grid_dirichlet(nodes, p);
    m.alpha = p;
    m.theta = 2.0;
    m.c0 = c0;
    m.c1 = c1;
    m.c2 = c2;
    return m;
}

LawMoments moments(const Ensemble& law, const SpaceSpec& space) {
    return {mean(law), second_moment(law, space)};
}

namespace {

// |g|^{e} with 0^0 = 1.
Eigen::ArrayXd abs_pow(const Eigen::ArrayXd& g, double e) {
    if (e == 0.0) {
        return Eigen::ArrayXd::Ones(g.size());
    }
    return g.abs().pow(e);
}

// G^T z for the edge-gradient operator G: (G^T z)_m = (z_m - z_{m+1}) / h.
State gradient_transpose(const Eigen::VectorXd& z, double h) {
    const Eigen::Index n = z.size() - 1;
    return (z.head(n) - z.tail(n)) / h;
}

}  // namespace

DriftEvaluation evaluate_drift(const ModelSpec& model, double /*t*/, const State& u,
                               const LawMoments& law) {
    const SpaceSpec& space = model.space;
    space.check_dim(u.size(), "drift");
    space.check_dim(law.mean.size(), "drift law");
    DriftEvaluation out;
    switch (model.family) {
    case ModelFamily::mvsde:
        out.value = model.a * u + model.b_mean * law.mean;
        out.stiffness = 0.0;
        break;
    case ModelFamily::porous_media: {
        const double r = space.v_exponent();
        const Eigen::ArrayXd values = pointwise(u, space).array();
        const double mf = model.kappa * law.second_moment;
        const Eigen::ArrayXd power = abs_pow(values, r - 2.0);
        const Eigen::VectorXd psi = (power * values + mf * values).matrix();
        out.value = -space.eigenvalues().cwiseProduct(project(psi, space));
        out.stiffness =
            space.eigenvalues()[space.dim() - 1] * ((r - 1.0) * power.maxCoeff() + mf);
        break;
    }
    case ModelFamily::p_laplace: {
        const double p = space.v_exponent();
        const double h = space.spacing();
        const Eigen::ArrayXd g = edge_gradients(u, space).array();
        const Eigen::ArrayXd power = abs_pow(g, p - 2.0);
        const Eigen::VectorXd flux = (power * g).matrix();
        const double node_mean = law.mean.mean();
        out.value = -gradient_transpose(flux, h);
        out.value.array() += model.c0 + model.c2 * node_mean;
        out.value += model.c1 * u;
        out.stiffness = 4.0 / (h * h) * (p - 1.0) * power.maxCoeff();
        break;
    }
    }
    return out;
}

State drift(const ModelSpec& model, double t, const State& u, const LawMoments& law) {
    return evaluate_drift(model, t, u, law).value;
}

State drift(const ModelSpec& model, double t, const State& u, const Ensemble& law) {
    return drift(model, t, u, moments(law, model.space));
}

double time_factor(const ModelSpec& model, double t) {
    if (model.hoelder_gamma > 0.0) {
        return 1.0 + std::pow(std::max(t, 0.0), model.hoelder_gamma);
    }
    return 1.0;
}

Eigen::VectorXd gains(const ModelSpec& model, double t, const State& u, const LawMoments& law) {
    model.space.check_dim(u.size(), "gains");
    const double c = time_factor(model, t);
    const double root_m2 = std::sqrt(std::max(law.second_moment, 0.0));
    Eigen::VectorXd s(model.noise_rank());
    for (Eigen::Index j = 0; j < model.noise_rank(); ++j) {
        const NoiseChannel& ch = model.channels[static_cast<std::size_t>(j)];
        double gain = ch.beta0;
        if (ch.beta1 != 0.0) {
            gain += ch.beta1 * h_inner(u, ch.direction, model.space);
        }
        if (ch.beta2 != 0.0) {
            gain += ch.beta2 * root_m2;
        }
        s[j] = c * gain;
    }
    return s;
}

State apply_diffusion(const ModelSpec& model, double t, const State& u, const LawMoments& law,
                      const Eigen::Ref<const Eigen::VectorXd>& w) {
    require(w.size() == model.noise_rank(), "apply_diffusion: w must have noise_rank entries");
    require(w.allFinite(), "apply_diffusion: w must be finite");
    const Eigen::VectorXd s = gains(model, t, u, law);
    State out = State::Zero(model.dim());
    for (Eigen::Index j = 0; j < model.noise_rank(); ++j) {
        out += (s[j] * w[j]) * model.channels[static_cast<std::size_t>(j)].direction;
    }
    return out;
}

State apply_diffusion(const ModelSpec& model, double t, const State& u, const Ensemble& law,
                      const Eigen::Ref<const Eigen::VectorXd>& w) {
    return apply_diffusion(model, t, u, moments(law, model.space), w);
}

double hs_norm_sq(const ModelSpec& model, double t, const State& u, const LawMoments& law) {
    const Eigen::VectorXd s = gains(model, t, u, law);
    double total = 0.0;
    for (Eigen::Index j = 0; j < model.noise_rank(); ++j) {
        total += s[j] * s[j] * h_norm_sq(model.channels[static_cast<std::size_t>(j)].direction, model.space);
    }
    return total;
}

double hs_norm_sq(const ModelSpec& model, double t, const State& u, const Ensemble& law) {
    return hs_norm_sq(model, t, u, moments(law, model.space));
}

State drift_vjp(const ModelSpec& model, double /*t*/, const State& u, const LawMoments& law,
                const State& y) {
    const SpaceSpec& space = model.space;
    space.check_dim(u.size(), "drift_vjp");
    space.check_dim(y.size(), "drift_vjp");
    switch (model.family) {
    case ModelFamily::mvsde:
        return model.a * y;
    case ModelFamily::porous_media: {
        const double r = space.v_exponent();
        const Eigen::ArrayXd values = pointwise(u, space).array();
        const Eigen::ArrayXd dpsi =
            (r - 1.0) * abs_pow(values, r - 2.0) + model.kappa * law.second_moment;
        const Eigen::ArrayXd weighted =
            pointwise(-space.eigenvalues().cwiseProduct(y), space).array();
        return project((dpsi * weighted).matrix(), space);
    }
    case ModelFamily::p_laplace: {
        const double p = space.v_exponent();
        const Eigen::ArrayXd g = edge_gradients(u, space).array();
        const Eigen::ArrayXd dflux = (p - 1.0) * abs_pow(g, p - 2.0);
        const Eigen::VectorXd gy = edge_gradients(y, space);
        return -gradient_transpose((dflux * gy.array()).matrix(), space.spacing()) + model.c1 * y;
    }
    }
    return State::Zero(u.size());
}

State diffusion_vjp(const ModelSpec& model, double t, const State& u, const LawMoments& /*law*/,
                    const Eigen::Ref<const Eigen::VectorXd>& w, const State& y) {
    require(w.size() == model.noise_rank(), "diffusion_vjp: w must have noise_rank entries");
    model.space.check_dim(u.size(), "diffusion_vjp");
    const double c = time_factor(model, t);
    State out = State::Zero(model.dim());
    for (Eigen::Index j = 0; j < model.noise_rank(); ++j) {
        const NoiseChannel& ch = model.channels[static_cast<std::size_t>(j)];
        if (ch.beta1 == 0.0 || w[j] == 0.0) {
            continue;
        }
        const double coeff = w[j] * c * ch.beta1 * ch.direction.dot(y);
        out += coeff * model.space.h_weights().cwiseProduct(ch.direction);
    }
    return out;
}

}  // namespace mvldp
