#include "solstab/nonlinearity.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace solstab {

namespace {
// y^q with the q<1 singular derivatives tamed at y = 0: all our uses multiply
// by at least y^{3/2}-sized prefactors, so clamping avoids 0 * inf = nan.
double safe_pow(double y, double q) {
    if (y <= 0.0) return q > 0.0 ? 0.0 : std::pow(1e-290, q);
    return std::pow(y, q);
}
} // namespace

NonlinearitySpec NonlinearitySpec::pure_power(double p) {
    if (p <= 1.0) throw std::invalid_argument("pure_power: need p > 1");
    NonlinearitySpec nl;
    nl.pure_ = true;
    nl.p_ = p;
    nl.m_ = nl.n_ = p;
    nl.terms_ = {{1.0, (p - 1.0) / 2.0}};
    return nl;
}

NonlinearitySpec NonlinearitySpec::combined(std::vector<std::pair<double, double>> ce) {
    if (ce.empty()) throw std::invalid_argument("combined: empty term list");
    NonlinearitySpec nl;
    nl.pure_ = false;
    double qmin = 1e300, qmax = -1e300;
    for (auto& [c, q] : ce) {
        if (q <= 0.0) throw std::invalid_argument("combined: exponents must be positive");
        (void)c;
        qmin = std::min(qmin, q);
        qmax = std::max(qmax, q);
    }
    nl.terms_ = std::move(ce);
    nl.m_ = 2.0 * qmin + 1.0;
    nl.n_ = 2.0 * qmax + 1.0;
    return nl;
}

double NonlinearitySpec::power() const {
    if (!pure_) throw std::logic_error("power(): not a pure power nonlinearity");
    return p_;
}

double NonlinearitySpec::F(double y) const {
    double s = 0.0;
    for (const auto& [c, q] : terms_) s += c * safe_pow(y, q);
    return s;
}

double NonlinearitySpec::dF(double y) const {
    double s = 0.0;
    for (const auto& [c, q] : terms_) s += c * q * safe_pow(y, q - 1.0);
    return s;
}

double NonlinearitySpec::d2F(double y) const {
    double s = 0.0;
    for (const auto& [c, q] : terms_) s += c * q * (q - 1.0) * safe_pow(y, q - 2.0);
    return s;
}

double NonlinearitySpec::G(double y) const {
    double s = 0.0;
    for (const auto& [c, q] : terms_) s += c / (q + 1.0) * safe_pow(y, q + 1.0);
    return s;
}

void NonlinearitySpec::require_growth_exponents() const {
    const double bound = 26.0 / 7.0;
    if (!(m_ > bound && n_ > bound)) {
        std::ostringstream os;
        os << "growth exponents m=" << m_ << ", n=" << n_ << " must exceed 26/7";
        throw std::invalid_argument(os.str());
    }
}

std::string NonlinearitySpec::describe() const {
    std::ostringstream os;
    if (pure_) {
        os << "pure_power(p=" << p_ << ")";
    } else {
        os << "combined(";
        for (size_t i = 0; i < terms_.size(); ++i) {
            if (i) os << ", ";
            os << terms_[i].first << "*y^" << terms_[i].second;
        }
        os << ")";
    }
    return os.str();
}

} // namespace solstab
