#pragma once

#include <string>

#include "penspline/simulate.hpp"
#include "penspline/solver.hpp"

namespace penspline {

// CSV schemas: `x,y` (regression/GLM/quantile), `x` (density),
// `x,time,event` (hazard), `lambda,I` (periodogram). All files carry a
// header row.
void write_dataset_csv(const Dataset& data, const std::string& path);
Dataset read_dataset_csv(ModelKind kind, const std::string& path);

// knots, degree, Gram and A_n as a JSON document
std::string basis_json(const BasisSpec& basis);

// fitted coefficients plus diagnostics
std::string fit_json(const ModelSpec& model, const BasisSpec& basis, int q, const PenalizedFit& fit);

// `x,eta_hat` on an equally spaced grid
void write_eval_csv(const SplineFunction& fit, int points, const std::string& path);

// merge RateReport JSON files into the summary table
// case,n,mse_mean,mse_se,pen_mean,slope,slope_se,expected,pass
void write_summary_csv(const std::vector<std::string>& report_paths, const std::string& out_path);

}  // namespace penspline
