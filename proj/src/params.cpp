#include "qifc/params.hpp"

#include <cmath>
#include <numbers>

#include "qifc/sampling.hpp"

namespace qifc {

double ForcingParams::period() const { return ForcingParams_period(*this); }

double GeneralMfParams::gamma_tilde() const {
    return generalized_coefficients(Gamma, g, J, a).gamma_tilde;
}

double GeneralMfParams::j_tilde() const {
    return generalized_coefficients(Gamma, g, J, a).j_tilde;
}

}  // namespace qifc
