#include "coms/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace coms {

CandidateSet select_initializations(const OfflineDataset& dataset, Eigen::Index count) {
  if (count < 1) throw ContractViolation("select_initializations: count must be positive");
  if (count > dataset.size()) {
    throw ContractViolation(fmt::format("select_initializations: requested {} seeds from {} designs",
                                        count, dataset.size()));
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(dataset.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return dataset.scores(a) > dataset.scores(b);
  });
  order.resize(static_cast<std::size_t>(count));

  CandidateSet seeds;
  seeds.designs.resize(dataset.dim(), count);
  for (Eigen::Index i = 0; i < count; ++i) seeds.designs.col(i) = dataset.designs.col(order[i]);
  seeds.provenance = std::move(order);
  return seeds;
}

std::vector<Eigen::Index> rank_by_prediction(const CandidateSet& candidates) {
  if (candidates.predictions.size() != candidates.size()) {
    throw ContractViolation("rank_by_prediction: candidates carry no surrogate predictions");
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(candidates.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return candidates.predictions(a) > candidates.predictions(b);
  });
  return order;
}

Matrix one_hot(const Sequence& seq, int alphabet) {
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(seq.size()), alphabet);
  for (std::size_t pos = 0; pos < seq.size(); ++pos) {
    if (seq[pos] < 0 || seq[pos] >= alphabet) {
      throw ContractViolation(fmt::format("letter {} at position {} outside alphabet of {}",
                                          seq[pos], pos, alphabet));
    }
    out(static_cast<Eigen::Index>(pos), seq[pos]) = 1.0;
  }
  return out;
}

Sequence letters_of(const Matrix& one_hot_rows) {
  Sequence seq(static_cast<std::size_t>(one_hot_rows.rows()));
  for (Eigen::Index pos = 0; pos < one_hot_rows.rows(); ++pos) {
    int hot = -1;
    for (Eigen::Index k = 0; k < one_hot_rows.cols(); ++k) {
      const double v = one_hot_rows(pos, k);
      if (v == 1.0 && hot < 0) {
        hot = static_cast<int>(k);
      } else if (v != 0.0) {
        hot = -2;
        break;
      }
    }
    if (hot < 0) throw ContractViolation(fmt::format("row {} is not one-hot", pos));
    seq[static_cast<std::size_t>(pos)] = hot;
  }
  return seq;
}

DesignVector encode_discrete(const Matrix& one_hot_rows, double smoothing) {
  const Eigen::Index alphabet = one_hot_rows.cols();
  if (alphabet < 2) throw ContractViolation("encode_discrete: alphabet needs at least 2 letters");
  if (!(smoothing > 0.0 && smoothing < 1.0)) {
    throw ContractViolation("encode_discrete: smoothing must lie in (0,1)");
  }
  const Sequence seq = letters_of(one_hot_rows);
  const double on = std::log(1.0 - smoothing);
  const double off = std::log(smoothing / static_cast<double>(alphabet - 1));
  DesignVector logits(one_hot_rows.rows() * alphabet);
  for (std::size_t pos = 0; pos < seq.size(); ++pos) {
    for (Eigen::Index k = 0; k < alphabet; ++k) {
      logits(static_cast<Eigen::Index>(pos) * alphabet + k) = (k == seq[pos]) ? on : off;
    }
  }
  return logits;
}

Sequence decode_sequence(const DesignVector& logits, DiscreteShape shape) {
  if (shape.length < 1 || shape.alphabet < 1 || logits.size() != shape.flat_dim()) {
    throw ContractViolation(fmt::format("decode_discrete: {} logits do not fit shape {}x{}",
                                        logits.size(), shape.length, shape.alphabet));
  }
  Sequence seq(static_cast<std::size_t>(shape.length));
  for (int pos = 0; pos < shape.length; ++pos) {
    int best = 0;
    for (int k = 1; k < shape.alphabet; ++k) {
      if (logits(pos * shape.alphabet + k) > logits(pos * shape.alphabet + best)) best = k;
    }
    seq[static_cast<std::size_t>(pos)] = best;
  }
  return seq;
}

Matrix decode_discrete(const DesignVector& logits, DiscreteShape shape) {
  return one_hot(decode_sequence(logits, shape), shape.alphabet);
}

}  // namespace coms
