#pragma once
// Shared expensive fixtures, solved once per test binary.

#include "sblt/profile_f.hpp"
#include "sblt/spectral.hpp"
#include "sblt/vsolver.hpp"

namespace sblt::fixtures {

inline const ProfileF& profile() {
    static const ProfileF f = solve_f(8.0, 8192);
    return f;
}

inline const SpectralModel& model_f() {
    static const SpectralModel m =
        build_generator(scaled_profile_killing(profile()), 48, 128);
    return m;
}

inline const VFamily& vfamily() {
    static const VFamily f;
    return f;
}

inline const F2Table& f2table() {
    static const F2Table t(vfamily(), profile(), model_f().lambda0());
    return t;
}

}  // namespace sblt::fixtures
