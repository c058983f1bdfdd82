#pragma once

// 50-digit binary floating point usable as an Eigen scalar.

#include <Eigen/Core>
#include <boost/multiprecision/cpp_bin_float.hpp>

namespace scaleinv {
using HighPrecision = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<50>,
                                                    boost::multiprecision::et_off>;
using HpMatrix = Eigen::Matrix<HighPrecision, Eigen::Dynamic, Eigen::Dynamic>;
using HpVector = Eigen::Matrix<HighPrecision, Eigen::Dynamic, 1>;
}  // namespace scaleinv

namespace Eigen {

template <>
struct NumTraits<scaleinv::HighPrecision> : GenericNumTraits<scaleinv::HighPrecision> {
  using Real = scaleinv::HighPrecision;
  using NonInteger = Real;
  using Literal = Real;
  using Nested = Real;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 20,
    AddCost = 40,
    MulCost = 80
  };
};

}  // namespace Eigen
