#include "sigcorr/model.hpp"

#include <cmath>

namespace sigcorr {

void SystemModel::validate() const {
    if (dim <= 0) throw std::invalid_argument("model: dim must be positive");
    auto check_dims = [&](const Matrix& M, const char* what) {
        if (M.rows() != dim || M.cols() != dim) {
            throw std::invalid_argument(std::string("model: ") + what +
                                        " must be dim x dim");
        }
    };
    check_dims(hamiltonian, "hamiltonian");
    if ((hamiltonian - hamiltonian.adjoint()).cwiseAbs().maxCoeff() > 1e-12) {
        throw std::invalid_argument("model: hamiltonian is not Hermitian");
    }
    for (const auto& L : decay_channels) check_dims(L, "decay channel");
    for (const auto& ch : channels) {
        check_dims(ch.c, "channel operator");
        if (!(ch.eta > 0.0 && ch.eta <= 1.0)) {
            throw std::invalid_argument("model: efficiency of channel '" + ch.label +
                                        "' must be in (0, 1]");
        }
    }
}

int SystemModel::channel_index(const std::string& label) const {
    for (std::size_t k = 0; k < channels.size(); ++k)
        if (channels[k].label == label) return static_cast<int>(k);
    throw std::invalid_argument("model: no channel labelled '" + label + "'");
}

Matrix dissipator(const Matrix& c) {
    if (c.rows() != c.cols()) throw std::invalid_argument("dissipator: non-square operator");
    Matrix cdc = c.adjoint() * c;
    return kron(c.conjugate(), c) - 0.5 * lmul(cdc) - 0.5 * rmul(cdc);
}

Matrix insertion_superop(const Matrix& c) {
    if (c.rows() != c.cols()) throw std::invalid_argument("insertion: non-square operator");
    return lmul(c) + rmul(c.adjoint());
}

Matrix innovation(const Matrix& c, const Matrix& rho) {
    if (c.rows() != c.cols() || c.rows() != rho.rows() || rho.rows() != rho.cols()) {
        throw std::invalid_argument("innovation: dimension mismatch");
    }
    Matrix sym = c * rho + rho * c.adjoint();
    Complex mean = (c * rho).trace() + (rho * c.adjoint()).trace();
    return sym - mean.real() * rho;
}

Matrix averaged_generator(const SystemModel& model) {
    model.validate();
    const Eigen::Index d2 = Eigen::Index(model.dim) * model.dim;
    Matrix gen = Matrix::Zero(d2, d2);
    const Complex i(0.0, 1.0);
    gen -= i * (lmul(model.hamiltonian) - rmul(model.hamiltonian));
    for (const auto& L : model.decay_channels) gen += dissipator(L);
    for (const auto& ch : model.channels) gen += dissipator(ch.c);
    return gen;
}

PropagatorCache::PropagatorCache(Matrix generator) : gen_(std::move(generator)) {
    Eigen::ComplexEigenSolver<Matrix> es(gen_);
    if (es.info() == Eigen::Success) {
        Matrix V = es.eigenvectors();
        Eigen::FullPivLU<Matrix> lu(V);
        if (lu.isInvertible()) {
            Matrix Vinv = lu.inverse();
            // Accept the spectral route only when V is well conditioned.
            double residual = (V * Vinv - Matrix::Identity(V.rows(), V.cols()))
                                  .cwiseAbs()
                                  .maxCoeff();
            if (residual < 1e-10) {
                eigvecs_ = std::move(V);
                eigvecs_inv_ = std::move(Vinv);
                eigvals_ = es.eigenvalues();
                spectral_ok_ = true;
            }
        }
    }
}

Matrix PropagatorCache::at(double t) const {
    if (t < 0) throw std::invalid_argument("propagator: t must be >= 0");
    if (spectral_ok_) {
        Vector phase = (t * eigvals_.array()).exp();
        return eigvecs_ * phase.asDiagonal() * eigvecs_inv_;
    }
    {
        std::lock_guard<std::mutex> lock(memo_mutex_);
        auto it = memo_.find(t);
        if (it != memo_.end()) return it->second;
    }
    Matrix P = expm(gen_, t);
    std::lock_guard<std::mutex> lock(memo_mutex_);
    return memo_.emplace(t, std::move(P)).first->second;
}

Vector PropagatorCache::apply(double t, const Vector& v) const {
    if (t < 0) throw std::invalid_argument("propagator: t must be >= 0");
    if (spectral_ok_) {
        Vector w = eigvecs_inv_ * v;
        w.array() *= (t * eigvals_.array()).exp();
        return eigvecs_ * w;
    }
    return at(t) * v;
}

Matrix propagator(const SystemModel& model, double t) {
    if (t < 0) throw std::invalid_argument("propagator: t must be >= 0");
    return expm(averaged_generator(model), t);
}

Matrix stationary_state(const SystemModel& model) {
    Matrix gen = averaged_generator(model);
    Eigen::ComplexEigenSolver<Matrix> es(gen);
    if (es.info() != Eigen::Success) throw NumericError("stationary_state: eigensolver failed");
    Vector lambda = es.eigenvalues();
    std::vector<Eigen::Index> order(lambda.size());
    for (Eigen::Index i = 0; i < lambda.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return std::abs(lambda(a)) < std::abs(lambda(b));
    });
    if (std::abs(lambda(order[0])) > 1e-9) {
        throw NumericError("stationary_state: no zero eigenvalue found");
    }
    if (lambda.size() > 1 && std::abs(lambda(order[1])) < 1e-6) {
        int nd = 0;
        for (Eigen::Index i = 0; i < lambda.size(); ++i)
            if (std::abs(lambda(i)) < 1e-6) ++nd;
        throw NonUniqueStationaryState(nd);
    }
    Matrix rho = unvec(es.eigenvectors().col(order[0]), model.dim);
    rho = 0.5 * (rho + rho.adjoint()).eval();
    Complex tr = rho.trace();
    if (std::abs(tr) < 1e-12) throw NumericError("stationary_state: traceless null vector");
    rho /= tr;
    double residual = (gen * vec(rho)).norm();
    if (residual > 1e-10) {
        throw NumericError("stationary_state: residual " + std::to_string(residual));
    }
    return rho;
}

Matrix choi_matrix(const Matrix& superop) {
    auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(double(superop.rows()))));
    Matrix C = Matrix::Zero(d * d, d * d);
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            Matrix Eij = Matrix::Zero(d, d);
            Eij(i, j) = 1.0;
            Matrix out = unvec(superop * vec(Eij), d);
            C.block(i * d, j * d, d, d) = out;
        }
    }
    return C;
}

}  // namespace sigcorr
