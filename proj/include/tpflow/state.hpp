#pragma once

#include <array>

#include "tpflow/field.hpp"

namespace tpflow {

// Conserved variables of the six-equation system on the padded grid
// (interior plus 3 ghost rings per side):
//   ws, wf    = jb * h^{s,f}           (scaled phase thickness measure)
//   qs, qf    = jb * h^{s,f} * v_{X,Y} (scaled phase momentum)
struct MixtureState {
    int nx = 0;  // padded dims
    int ny = 0;
    Field ws, wf;
    Field qsx, qsy, qfx, qfy;

    MixtureState() = default;
    MixtureState(int nx_, int ny_)
        : nx(nx_), ny(ny_),
          ws(nx_, ny_), wf(nx_, ny_),
          qsx(nx_, ny_), qsy(nx_, ny_), qfx(nx_, ny_), qfy(nx_, ny_) {}

    std::array<Field*, 6> fields() { return {&ws, &wf, &qsx, &qsy, &qfx, &qfy}; }
    std::array<const Field*, 6> fields() const {
        return {&ws, &wf, &qsx, &qsy, &qfx, &qfy};
    }
    static constexpr const char* field_names[6] = {"ws", "wf", "qsx", "qsy", "qfx", "qfy"};
};

} // namespace tpflow
