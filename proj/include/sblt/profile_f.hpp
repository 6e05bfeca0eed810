#pragma once
// Steady scaling profile F: the positive even solution of
//   F'' + x F' + F(2 - F) = 0,  F'(0) = 0,  F(x) ~ c1 |x| exp(-x^2/2).
// Solved by collocation + damped Newton on a uniform symmetric grid with
// the tail constant c1 as an extra unknown.

#include <cstddef>
#include <string>
#include <vector>

namespace sblt {

struct ProfileF {
    double half_width = 0.0;      // L; grid covers [-L, L]
    double dx = 0.0;
    std::vector<double> grid;     // n+1 nodes
    std::vector<double> values;   // F at nodes, all > 0
    double c1 = 0.0;              // tail constant
    double residual_norm = 0.0;   // max FD residual at interior nodes

    // F anywhere: cubic interpolation inside [-L, L], c1|x|exp(-x^2/2) beyond.
    double operator()(double x) const;
};

// Gaussian-order tail shape g(x) = |x| exp(-x^2/2).
double f_tail_shape(double x);

// pre: half_width >= 6, intervals >= 512 (even). Throws on Newton failure
// with a damping trace in the message.
ProfileF solve_f(double half_width = 8.0, int intervals = 8192);

// CSV export: header x,F,residual.
void write_profile_csv(const ProfileF& f, const std::string& path);

}  // namespace sblt
