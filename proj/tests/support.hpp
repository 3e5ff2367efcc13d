#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>

#include <unistd.h>

#include <Eigen/Dense>

#include "distress/core.hpp"

namespace testing {

/// Fresh directory under the system temp dir, removed on scope exit.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("distress-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

    std::filesystem::path write(const std::string& name, const std::string& contents) const {
        const auto p = path_ / name;
        std::filesystem::create_directories(p.parent_path());
        distress::write_file_atomic(p, contents);
        return p;
    }

private:
    std::filesystem::path path_;
};

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd X(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) X(i, j) = normal(rng);
    return X;
}

/// Bernoulli labels from a logistic model with the given slopes.
inline Eigen::VectorXd logistic_labels(const Eigen::MatrixXd& X, const Eigen::VectorXd& beta, double intercept,
                                       std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::VectorXd y(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const double eta = intercept + X.row(i).dot(beta);
        y[i] = u(rng) < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0;
    }
    return y;
}

/// Pairwise concordance over every (positive, negative) pair; ties count one half.
inline double brute_force_auc(const Eigen::VectorXd& s, const Eigen::VectorXd& y) {
    double num = 0.0, pairs = 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (y[i] == 0.0) continue;
        for (Eigen::Index j = 0; j < s.size(); ++j) {
            if (y[j] != 0.0) continue;
            pairs += 1.0;
            num += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
        }
    }
    return pairs > 0.0 ? num / pairs : distress::kUndefined;
}

}  // namespace testing

namespace testing {

/// FNV-1a 64 over the bytes of `text`.
inline std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace testing
