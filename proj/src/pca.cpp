#include "distress/pca.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "distress/core.hpp"

namespace distress {

std::vector<std::string> PcaModel::component_names() const {
    std::vector<std::string> out;
    for (int c = 1; c <= k; ++c) out.push_back("pc" + std::to_string(c));
    return out;
}

PcaModel pca_fit(const Eigen::MatrixXd& X, const std::vector<std::string>& names, double threshold) {
    if (static_cast<Eigen::Index>(names.size()) != X.cols()) throw DataError("pca: name count differs from columns");
    if (X.rows() < 2) throw DataError("pca: at least two rows required");
    if (!(threshold > 0.0 && threshold <= 1.0)) throw DataError("pca: threshold must be in (0,1]");
    if (!X.allFinite()) throw DataError("pca: training rows contain missing or non-finite values");

    PcaModel m;
    m.input_names = names;
    const double n = static_cast<double>(X.rows());
    const Eigen::VectorXd mean = X.colwise().mean();
    std::vector<double> means, sds;
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        const double sd = std::sqrt((X.col(j).array() - mean[j]).square().sum() / (n - 1.0));
        if (sd > 0.0) {
            m.kept.push_back(static_cast<int>(j));
            means.push_back(mean[j]);
            sds.push_back(sd);
        } else {
            m.dropped.push_back(names[static_cast<std::size_t>(j)]);
        }
    }
    if (m.kept.empty()) throw DataError("pca: every input column is constant");
    const auto p = static_cast<Eigen::Index>(m.kept.size());
    m.mean = Eigen::Map<const Eigen::VectorXd>(means.data(), p);
    m.sd = Eigen::Map<const Eigen::VectorXd>(sds.data(), p);

    Eigen::MatrixXd Z(X.rows(), p);
    for (Eigen::Index c = 0; c < p; ++c) Z.col(c) = (X.col(m.kept[static_cast<std::size_t>(c)]).array() - m.mean[c]) / m.sd[c];
    const Eigen::MatrixXd R = (Z.transpose() * Z) / (n - 1.0);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(R);
    if (es.info() != Eigen::Success) throw NumericalError("pca: eigendecomposition failed");
    m.eigenvalues = es.eigenvalues().reverse().cwiseMax(0.0);
    m.loadings = es.eigenvectors().rowwise().reverse();
    // Sign convention: the largest-magnitude loading of each component is positive.
    for (Eigen::Index c = 0; c < p; ++c) {
        Eigen::Index arg;
        m.loadings.col(c).cwiseAbs().maxCoeff(&arg);
        if (m.loadings(arg, c) < 0.0) m.loadings.col(c) *= -1.0;
    }
    m.explained = m.eigenvalues / m.eigenvalues.sum();
    double cumulative = 0.0;
    m.k = static_cast<int>(p);
    for (Eigen::Index c = 0; c < p; ++c) {
        cumulative += m.explained[c];
        if (cumulative >= threshold - 1e-12) {
            m.k = static_cast<int>(c + 1);
            break;
        }
    }
    return m;
}

Eigen::MatrixXd pca_transform(const PcaModel& m, const Eigen::MatrixXd& X, const std::vector<std::string>& names) {
    if (names != m.input_names) throw DataError("pca: input schema differs from the fitted schema");
    const auto p = static_cast<Eigen::Index>(m.kept.size());
    Eigen::MatrixXd Z(X.rows(), p);
    for (Eigen::Index c = 0; c < p; ++c) Z.col(c) = (X.col(m.kept[static_cast<std::size_t>(c)]).array() - m.mean[c]) / m.sd[c];
    return Z * m.loadings.leftCols(m.k);
}

}  // namespace distress
