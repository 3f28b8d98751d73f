#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>

namespace oblimit {

/// 50 significant decimal digits. Used wherever logarithm differences
/// cancel catastrophically in double precision.
using HighPrecision = boost::multiprecision::cpp_bin_float_50;

template <class To, class From>
To real_cast(const From& value) {
    return static_cast<To>(value);
}

}  // namespace oblimit
