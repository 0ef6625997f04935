#pragma once

#include "mkv/coefficients.hpp"
#include "mkv/empirical_law.hpp"

namespace mkv {

// b y + f - r x y. Throws DomainError if a is outside the action set.
double hamiltonian(const ControlModel& model, double t, double x, const EmpiricalLaw& mu, double a, double y);

// Derivative of the Hamiltonian in a (b2 y + cost_da for linear drifts,
// centered difference of the drift otherwise).
double hamiltonian_da(const ControlModel& model, double t, double x, const EmpiricalLaw& mu, double a, double y);

// Minimizer of the Hamiltonian over the action set. Uses the closed form when
// the model provides one (clipped to the action set), otherwise golden
// section refined by bisection on the a-derivative, to 1e-10 in a.
double argmin_hamiltonian(const ControlModel& model, double t, double x, const EmpiricalLaw& mu, double y);

// FBSDE coefficients of the mean field control problem. The m-integral of the
// measure derivative is the equal-weight average over the atoms of m.
CoefficientSet assemble_mfc_coefficients(const ControlModel& model, double sigma);

// FBSDE coefficients of the mean field game.
CoefficientSet assemble_mfg_coefficients(const ControlModel& model, double sigma);

}  // namespace mkv
