#pragma once

// Recording tape for reverse accumulation over network parameters.
//
// Every node holds a block of jets: one row per channel (neuron) and five
// columns per evaluation point, laid out as column = point * 5 + order.
// Nodes are appended in evaluation order, so the node list is already
// topologically sorted. Each node keeps what its reverse step needs: the
// affine nodes keep their weight matrix and input block, the tanh nodes keep
// the per-entry local jet Jacobians, and the constant-factor nodes keep the
// factor jets.

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "beampinn/jets.hpp"

namespace beampinn {

struct NodeRef {
  std::size_t index = 0;
  friend bool operator==(NodeRef, NodeRef) = default;
};

class Tape {
 public:
  using Block = Eigen::MatrixXd;

  explicit Tape(std::size_t n_params = 0) : n_params_(n_params) {}

  std::size_t n_params() const { return n_params_; }
  std::size_t points() const { return points_; }
  std::size_t size() const { return nodes_.size(); }

  /// Drops all nodes; the tape can then record a fresh evaluation.
  void reset(std::size_t n_params) {
    nodes_.clear();
    points_ = 0;
    n_params_ = n_params;
  }

  /// Seed jets (xi, 1, 0, 0, 0) for each evaluation point, as a 1-row block.
  NodeRef input(std::span<const double> xi) {
    expects(nodes_.empty(), "Tape::input must be the first recorded node");
    expects(!xi.empty(), "Tape::input needs at least one point");
    points_ = xi.size();
    Node node;
    node.kind = Kind::input;
    node.value = Block::Zero(1, cols());
    for (std::size_t p = 0; p < points_; ++p) {
      node.value(0, col(p, 0)) = xi[p];
      node.value(0, col(p, 1)) = 1.0;
    }
    return push(std::move(node));
  }

  /// out = W * in + b, with b added to the value coefficient only.
  /// `weights` is row-major (out x in); parameters live at
  /// theta[param_offset .. param_offset + out*in + out).
  NodeRef affine(NodeRef in, std::span<const double> weights, std::span<const double> bias,
                 std::size_t param_offset) {
    const Block& x = at(in).value;
    const auto n_in = static_cast<Eigen::Index>(x.rows());
    const auto n_out = static_cast<Eigen::Index>(bias.size());
    expects(weights.size() == static_cast<std::size_t>(n_in * n_out), "Tape::affine weight shape mismatch");
    expects(param_offset + weights.size() + bias.size() <= n_params_, "Tape::affine parameters out of range");
    Node node;
    node.kind = Kind::affine;
    node.operand = in.index;
    node.param_offset = param_offset;
    node.weights = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        weights.data(), n_out, n_in);
    node.value.noalias() = node.weights * x;
    const Eigen::Map<const Eigen::VectorXd> b(bias.data(), n_out);
    for (std::size_t p = 0; p < points_; ++p) node.value.col(col(p, 0)) += b;
    return push(std::move(node));
  }

  /// Elementwise tanh applied to every (channel, point) jet.
  NodeRef tanh(NodeRef in) {
    const Block& x = at(in).value;
    Node node;
    node.kind = Kind::tanh;
    node.operand = in.index;
    node.value.resize(x.rows(), x.cols());
    node.partials.resize(static_cast<std::size_t>(x.rows()) * points_);
    for (std::size_t p = 0; p < points_; ++p) {
      for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const Jet4 u = read(x, r, p);
        write(node.value, r, p, jet_tanh(u));
        node.partials[p * static_cast<std::size_t>(x.rows()) + static_cast<std::size_t>(r)] = jet_tanh_partials(u);
      }
    }
    return push(std::move(node));
  }

  /// Multiplies each point's jets by a constant jet (one factor per point).
  NodeRef mul_const(NodeRef in, std::span<const Jet4> factors) {
    expects(factors.size() == points_, "Tape::mul_const needs one factor per point");
    const Block& x = at(in).value;
    Node node;
    node.kind = Kind::mul_const;
    node.operand = in.index;
    node.factors.assign(factors.begin(), factors.end());
    node.value.resize(x.rows(), x.cols());
    for (std::size_t p = 0; p < points_; ++p)
      for (Eigen::Index r = 0; r < x.rows(); ++r) write(node.value, r, p, jet_mul(factors[p], read(x, r, p)));
    return push(std::move(node));
  }

  const Block& value(NodeRef ref) const { return at(ref).value; }

  Jet4 jet(NodeRef ref, std::size_t point, std::size_t row = 0) const {
    expects(point < points_, "Tape::jet point out of range");
    const Block& v = at(ref).value;
    expects(row < static_cast<std::size_t>(v.rows()), "Tape::jet row out of range");
    return read(v, static_cast<Eigen::Index>(row), point);
  }

  /// Gradient of a single recorded coefficient with respect to all parameters.
  std::vector<double> backward(NodeRef out, std::size_t point, std::size_t coefficient, std::size_t row = 0) const {
    expects(coefficient < kJetSize, "Tape::backward coefficient must be in 0..4");
    expects(point < points_, "Tape::backward point out of range");
    const Block& v = at(out).value;
    expects(row < static_cast<std::size_t>(v.rows()), "Tape::backward row out of range");
    Block seed = Block::Zero(v.rows(), v.cols());
    seed(static_cast<Eigen::Index>(row), col(point, coefficient)) = 1.0;
    return backward(out, seed);
  }

  /// Vector-Jacobian product: returns sum over entries of seed * d(out)/d(theta).
  std::vector<double> backward(NodeRef out, const Block& seed) const {
    const Node& top = at(out);
    expects(seed.rows() == top.value.rows() && seed.cols() == top.value.cols(), "Tape::backward seed shape mismatch");
    std::vector<double> grad(n_params_, 0.0);
    std::vector<Block> adjoint(out.index + 1);
    adjoint[out.index] = seed;
    for (std::size_t i = out.index + 1; i-- > 0;) {
      Block& adj = adjoint[i];
      if (adj.size() == 0) continue;
      const Node& node = nodes_[i];
      switch (node.kind) {
        case Kind::input:
          break;
        case Kind::affine: {
          const Block& x = nodes_[node.operand].value;
          const auto n_out = node.weights.rows();
          const auto n_in = node.weights.cols();
          Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> gw(
              grad.data() + node.param_offset, n_out, n_in);
          gw.noalias() += adj * x.transpose();
          Eigen::Map<Eigen::VectorXd> gb(grad.data() + node.param_offset + n_out * n_in, n_out);
          for (std::size_t p = 0; p < points_; ++p) gb += adj.col(col(p, 0));
          if (nodes_[node.operand].kind != Kind::input) accumulate(adjoint, node.operand, node.weights.transpose() * adj);
          break;
        }
        case Kind::tanh: {
          const auto rows = adj.rows();
          Block down(rows, adj.cols());
          for (std::size_t p = 0; p < points_; ++p)
            for (Eigen::Index r = 0; r < rows; ++r) {
              const auto& local = node.partials[p * static_cast<std::size_t>(rows) + static_cast<std::size_t>(r)];
              write(down, r, p, pullback(local, read(adj, r, p)));
            }
          accumulate(adjoint, node.operand, down);
          break;
        }
        case Kind::mul_const: {
          Block down(adj.rows(), adj.cols());
          for (std::size_t p = 0; p < points_; ++p) {
            const auto local = jet_mul_partials(node.factors[p]);
            for (Eigen::Index r = 0; r < adj.rows(); ++r) write(down, r, p, pullback(local, read(adj, r, p)));
          }
          accumulate(adjoint, node.operand, down);
          break;
        }
      }
      adj.resize(0, 0);
    }
    return grad;
  }

  static Eigen::Index col(std::size_t point, std::size_t order) {
    return static_cast<Eigen::Index>(point * kJetSize + order);
  }

 private:
  enum class Kind { input, affine, tanh, mul_const };

  struct Node {
    Kind kind = Kind::input;
    std::size_t operand = 0;
    std::size_t param_offset = 0;
    Block value;
    Eigen::MatrixXd weights;
    std::vector<JetPartials<double>> partials;
    std::vector<Jet4> factors;
  };

  Eigen::Index cols() const { return static_cast<Eigen::Index>(points_ * kJetSize); }

  const Node& at(NodeRef ref) const {
    expects(ref.index < nodes_.size(), "Tape: invalid node reference");
    return nodes_[ref.index];
  }

  NodeRef push(Node node) {
    nodes_.push_back(std::move(node));
    return NodeRef{nodes_.size() - 1};
  }

  static Jet4 read(const Block& b, Eigen::Index r, std::size_t p) {
    Jet4 j;
    for (std::size_t k = 0; k < kJetSize; ++k) j.d[k] = b(r, col(p, k));
    return j;
  }

  static void write(Block& b, Eigen::Index r, std::size_t p, const Jet4& j) {
    for (std::size_t k = 0; k < kJetSize; ++k) b(r, col(p, k)) = j.d[k];
  }

  // adjoint_in[j] = sum_k adjoint_out[k] * local[k][j]
  static Jet4 pullback(const JetPartials<double>& local, const Jet4& adj_out) {
    Jet4 a;
    for (std::size_t j = 0; j < kJetSize; ++j) {
      double acc = 0.0;
      for (std::size_t k = j; k < kJetSize; ++k) acc += adj_out.d[k] * local[k][j];
      a.d[j] = acc;
    }
    return a;
  }

  template <class Expr>
  static void accumulate(std::vector<Block>& adjoint, std::size_t index, const Expr& contribution) {
    if (adjoint[index].size() == 0)
      adjoint[index] = contribution;
    else
      adjoint[index] += contribution;
  }

  std::vector<Node> nodes_;
  std::size_t points_ = 0;
  std::size_t n_params_ = 0;
};

}  // namespace beampinn
