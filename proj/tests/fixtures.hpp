#pragma once

#include <cmath>

#include "unifactor/matrix.hpp"

namespace fixtures {

using unifactor::Matrix;
using unifactor::SymmetricMatrix;
using unifactor::Vector;

// Two-factor-unidentifiable examples: (p, q) = (2, 1) and (4, 2).
inline SymmetricMatrix sigma_I() { return SymmetricMatrix::from_rows({{2, 1}, {1, 3}}); }

inline SymmetricMatrix sigma_II() {
  return SymmetricMatrix::from_rows(
      {{3, -1, -2, 2}, {-1, 2, 0, -1}, {-2, 0, 4, -2}, {2, -1, -2, 2}});
}

/// sigma_I = a a^T + diag(5/3, 0) with a = (1/sqrt 3, sqrt 3).
inline Matrix loading_I() {
  Matrix a(2, 1);
  a << 1.0 / std::sqrt(3.0), std::sqrt(3.0);
  return a;
}

inline Matrix loading_II() {
  Matrix a(4, 2);
  a << 1, -1, -1, 0, 0, 2, 1, -1;
  return a;
}

// Identifiable examples with exact factor decompositions.
inline SymmetricMatrix sigma_i() {
  return SymmetricMatrix::from_rows({{2, 1, 1}, {1, 3, 1}, {1, 1, 3}});
}

inline Matrix loading_i() { return Matrix::Ones(3, 1); }

inline Vector residual_i() {
  Vector v(3);
  v << 1, 2, 2;
  return v;
}

inline SymmetricMatrix sigma_ii() {
  return SymmetricMatrix::from_rows({{3, -2, -1, 1, -2},
                                     {-2, 5, 0, -2, 2},
                                     {-1, 0, 4, 0, 1},
                                     {1, -2, 0, 4, -1},
                                     {-2, 2, 1, -1, 5}});
}

inline Matrix loading_ii() {
  Matrix a(5, 2);
  a << 1, -1, -2, 0, 0, 1, 1, 0, -1, 1;
  return a;
}

inline Vector residual_ii() {
  Vector v(5);
  v << 1, 1, 3, 3, 3;
  return v;
}

// Printed sample covariances of the two real-data examples.
inline SymmetricMatrix sigma_city() {
  return SymmetricMatrix::from_rows({{82.5524, 4.6990, -5.6177},
                                     {4.6990, 4.6262, -1.5502},
                                     {-5.6177, -1.5502, 4.7571}});
}

inline SymmetricMatrix sigma_air() {
  return SymmetricMatrix::from_rows({{134.7, 848.1, 460.4, 118.3, 62.0},
                                     {848.1, 7706.9, 2941.1, 885.2, 296.7},
                                     {460.4, 2941.1, 2189.4, 576.9, 302.9},
                                     {118.3, 885.2, 576.9, 264.8, 70.4},
                                     {62.0, 296.7, 302.9, 70.4, 61.9}});
}

}  // namespace fixtures
