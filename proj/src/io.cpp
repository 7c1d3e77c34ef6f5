#include "penspline/io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "penspline/harness.hpp"

namespace penspline {

using nlohmann::json;

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out.precision(17);
    return out;
}

std::vector<std::vector<double>> read_csv_columns(const std::string& path, size_t expected_cols) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open input file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty csv file: " + path);
    std::vector<std::vector<double>> cols(expected_cols);
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        size_t c = 0;
        while (std::getline(row, cell, ',')) {
            if (c >= expected_cols)
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": too many columns");
            try {
                cols[c].push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": not a number: " + cell);
            }
            ++c;
        }
        if (c != expected_cols)
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": expected " + std::to_string(expected_cols) + " columns");
    }
    return cols;
}

}  // namespace

void write_dataset_csv(const Dataset& data, const std::string& path) {
    auto out = open_out(path);
    if (const auto* xy = std::get_if<XYData>(&data)) {
        out << "x,y\n";
        for (size_t i = 0; i < xy->x.size(); ++i) out << xy->x[i] << "," << xy->y[i] << "\n";
    } else if (const auto* pts = std::get_if<PointData>(&data)) {
        out << "x\n";
        for (double x : pts->x) out << x << "\n";
    } else if (const auto* surv = std::get_if<SurvivalData>(&data)) {
        out << "x,time,event\n";
        for (size_t i = 0; i < surv->x.size(); ++i)
            out << surv->x[i] << "," << surv->time[i] << "," << int(surv->event[i]) << "\n";
    } else {
        const auto& per = std::get<PeriodogramData>(data);
        out << "lambda,I\n";
        for (size_t i = 0; i < per.freq.size(); ++i)
            out << per.freq[i] << "," << per.ordinate[i] << "\n";
    }
}

Dataset read_dataset_csv(ModelKind kind, const std::string& path) {
    switch (kind) {
        case ModelKind::Gaussian:
        case ModelKind::Logistic:
        case ModelKind::Poisson:
        case ModelKind::Quantile: {
            auto cols = read_csv_columns(path, 2);
            return XYData{std::move(cols[0]), std::move(cols[1])};
        }
        case ModelKind::LogDensity: {
            auto cols = read_csv_columns(path, 1);
            return PointData{std::move(cols[0])};
        }
        case ModelKind::Hazard: {
            auto cols = read_csv_columns(path, 3);
            SurvivalData d;
            d.x = std::move(cols[0]);
            d.time = std::move(cols[1]);
            d.event.reserve(cols[2].size());
            for (double e : cols[2]) d.event.push_back(e != 0.0 ? 1 : 0);
            return d;
        }
        case ModelKind::Spectral: {
            auto cols = read_csv_columns(path, 2);
            PeriodogramData d;
            d.freq = std::move(cols[0]);
            d.ordinate = std::move(cols[1]);
            d.boundary.resize(d.freq.size(), 0);
            constexpr double kPi = 3.14159265358979323846;
            for (size_t i = 0; i < d.freq.size(); ++i)
                d.boundary[i] = (d.freq[i] < 1e-12 || std::abs(d.freq[i] - kPi) < 1e-9) ? 1 : 0;
            return d;
        }
    }
    throw std::logic_error("read_dataset_csv: unreachable");
}

std::string basis_json(const BasisSpec& basis) {
    json j;
    j["degree"] = basis.degree();
    j["dim"] = basis.dim();
    j["domain"] = {basis.knots().lo, basis.knots().hi};
    j["interior_knots"] = basis.knots().interior;
    j["mesh_ratio"] = basis.knots().mesh_ratio();
    j["delta"] = basis.knots().max_gap();
    const MatrixXd G = l2_gram(basis);
    json gram = json::array();
    for (int i = 0; i < G.rows(); ++i) {
        json row = json::array();
        for (int c = 0; c < G.cols(); ++c) row.push_back(G(i, c));
        gram.push_back(row);
    }
    j["gram"] = gram;
    j["A_n"] = complexity_constant(basis);
    return j.dump(2);
}

std::string fit_json(const ModelSpec& model, const BasisSpec& basis, int q,
                     const PenalizedFit& fit) {
    json j;
    j["model"] = model_name(model);
    j["degree"] = basis.degree();
    j["q"] = q;
    j["lambda"] = fit.lambda;
    j["domain"] = {basis.knots().lo, basis.knots().hi};
    j["interior_knots"] = basis.knots().interior;
    j["coeffs"] = std::vector<double>(fit.coeffs.data(), fit.coeffs.data() + fit.coeffs.size());
    j["objective"] = fit.objective_value;
    j["grad_norm"] = fit.grad_norm;
    j["iterations"] = fit.iterations;
    j["converged"] = fit.converged;
    if (!fit.diagnostic.empty()) j["diagnostic"] = fit.diagnostic;
    return j.dump(2);
}

void write_eval_csv(const SplineFunction& fit, int points, const std::string& path) {
    auto out = open_out(path);
    out << "x,eta_hat\n";
    const double lo = fit.basis.knots().lo, hi = fit.basis.knots().hi;
    for (int i = 0; i < points; ++i) {
        const double x = lo + (hi - lo) * static_cast<double>(i) / (points - 1);
        out << x << "," << fit.value(x) << "\n";
    }
}

void write_summary_csv(const std::vector<std::string>& report_paths, const std::string& out_path) {
    auto out = open_out(out_path);
    out << "case,n,mse_mean,mse_se,pen_mean,slope,slope_se,expected,pass\n";
    for (const auto& path : report_paths) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open report: " + path);
        std::stringstream buf;
        buf << in.rdbuf();
        const RateReport rep = RateReport::from_json(buf.str());
        for (const auto& pt : rep.points)
            out << rep.case_label << "," << pt.n << "," << pt.mse_mean << "," << pt.mse_se << ","
                << pt.pen_mean << "," << rep.slope << "," << rep.slope_se << "," << rep.expected
                << "," << (rep.pass_undefined ? "undefined" : (rep.pass ? "true" : "false"))
                << "\n";
    }
}

}  // namespace penspline
