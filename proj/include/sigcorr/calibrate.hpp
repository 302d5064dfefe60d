#pragma once

// Parameter estimation: weighted least-squares fits of model rates and
// efficiencies to observed two-point correlator curves.

#include "sigcorr/exact.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace sigcorr {

// One observed point of a filtered two-point correlator curve: detectors
// (a, b), exponential filter bandwidth, lag (filter f^lag on a, f^0 on b,
// stationary state), measured value and its standard error.
struct CurveObservation {
    int detector_a = 0;
    int detector_b = 0;
    double lambda = 10.0;
    double lag = 0.0;
    double value = 0.0;
    double stderr_ = 1.0;
    double weight = 1.0;
};

struct FitParameter {
    std::string name;
    double lower = 0.0;
    double upper = 1.0;
    double initial = 0.5;
};

struct FitProblem {
    // Builds the model from a parameter vector (same order as `parameters`).
    std::function<SystemModel(const std::vector<double>&)> build;
    std::vector<FitParameter> parameters;
    std::vector<CurveObservation> observations;
    double prediction_tol = 1e-6;
};

struct FitResult {
    std::vector<double> estimates;
    double residual = 0.0;  // weighted sum of squares at the optimum
    std::vector<double> sensitivity;      // finite-difference curvature proxy
    std::vector<bool> identifiable;
    bool converged = false;
    long evaluations = 0;
};

// Exact-engine predictions for the observation list (deterministic; cached
// per engine instance through the propagator memo).
std::vector<double> predict_curves(const SystemModel& model,
                                   const std::vector<CurveObservation>& observations,
                                   double tol = 1e-6);

// Bounded Nelder-Mead least squares with restart-on-stall; deterministic
// given inputs and budget. Parameters with vanishing finite-difference
// sensitivity across all observations are flagged unidentifiable.
FitResult fit(const FitProblem& problem, long budget = 2000);

std::vector<CurveObservation> load_observations_csv(const std::string& path);

}  // namespace sigcorr
