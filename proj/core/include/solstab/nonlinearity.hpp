#pragma once

#include <string>
#include <vector>

namespace solstab {

// Nonlinearity F entering i u_t = -Delta u - F(|u|^2) u.
//
// pure_power(p):  F(y) = y^{(p-1)/2}
// combined:       F(y) = sum_i c_i y^{q_i}, q_i > 0
//
// m and n are the small-/large-argument degrees in u (pure power: m = n = p;
// combined: m = 2 min q + 1, n = 2 max q + 1).
class NonlinearitySpec {
public:
    static NonlinearitySpec pure_power(double p);
    static NonlinearitySpec combined(std::vector<std::pair<double, double>> coeff_exp);

    double F(double y) const;
    double dF(double y) const;
    double d2F(double y) const;
    double G(double y) const; // primitive of F, G(0) = 0

    double m() const { return m_; }
    double n() const { return n_; }
    bool is_pure_power() const { return pure_; }
    double power() const; // p, pure power only
    const std::vector<std::pair<double, double>>& terms() const { return terms_; }

    // Assumption-mode gate: m, n > 26/7. Throws when violated.
    void require_growth_exponents() const;

    std::string describe() const;

private:
    bool pure_ = true;
    double p_ = 3.0;
    std::vector<std::pair<double, double>> terms_; // (c_i, q_i)
    double m_ = 3.0, n_ = 3.0;
};

} // namespace solstab
