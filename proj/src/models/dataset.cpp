#include "distress/models/dataset.hpp"

#include <cmath>

namespace distress {

void validate(const Dataset& data, bool allow_missing) {
    const Eigen::Index n = data.X.rows();
    if (data.y.size() != n) throw DataError("dataset: label count differs from row count");
    if (data.time.size() != 0 && data.time.size() != n) throw DataError("dataset: survival times differ from row count");
    if (data.status.size() != data.time.size()) throw DataError("dataset: survival status differs from times");
    if (static_cast<Eigen::Index>(data.feature_names.size()) != data.X.cols())
        throw DataError("dataset: feature name count differs from column count");
    for (Eigen::Index i = 0; i < n; ++i)
        if (data.y[i] != 0.0 && data.y[i] != 1.0) throw DataError("dataset: label outside {0,1}");
    for (Eigen::Index j = 0; j < data.X.cols(); ++j)
        for (Eigen::Index i = 0; i < n; ++i) {
            const double v = data.X(i, j);
            if (std::isnan(v)) {
                if (!allow_missing)
                    throw DataError("dataset: residual missing value in '" + data.feature_names[static_cast<std::size_t>(j)] +
                                    "' (this model family requires imputed inputs)");
            } else if (!std::isfinite(v)) {
                throw DataError("dataset: non-finite value in '" + data.feature_names[static_cast<std::size_t>(j)] + "'");
            }
        }
}

std::uint64_t schema_fingerprint(const std::vector<std::string>& feature_names) {
    std::uint64_t h = fnv1a("distress-schema");
    for (const auto& name : feature_names) {
        h = fnv1a(name, h);
        h = fnv1a(std::string_view("\x1f", 1), h);
    }
    return h;
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& X) {
    Standardizer s;
    s.mean = Eigen::VectorXd::Zero(X.cols());
    s.sd = Eigen::VectorXd::Ones(X.cols());
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        double sum = 0.0;
        Eigen::Index n = 0;
        for (Eigen::Index i = 0; i < X.rows(); ++i)
            if (!std::isnan(X(i, j))) {
                sum += X(i, j);
                ++n;
            }
        if (n == 0) continue;
        const double mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (Eigen::Index i = 0; i < X.rows(); ++i)
            if (!std::isnan(X(i, j))) ss += (X(i, j) - mean) * (X(i, j) - mean);
        s.mean[j] = mean;
        const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
        s.sd[j] = sd > 0.0 && std::isfinite(sd) ? sd : 1.0;
    }
    return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& X) const {
    if (X.cols() != mean.size()) throw DataError("standardizer: column count mismatch");
    return (X.rowwise() - mean.transpose()).array().rowwise() / sd.transpose().array();
}

}  // namespace distress
