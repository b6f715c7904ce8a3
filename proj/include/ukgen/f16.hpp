#pragma once

#include <cstdint>
#include <cstring>

namespace ukgen {

// IEEE 754 binary16 storage semantics. f16 buffers keep their values as
// float in memory; every store rounds through these conversions
// (round-to-nearest-even), so arithmetic stays in f32 while storage behaves
// like a real 16-bit array.

inline uint16_t f32_to_f16_bits(float value) {
  uint32_t f;
  std::memcpy(&f, &value, sizeof f);
  const uint16_t h_sgn = static_cast<uint16_t>((f & 0x80000000u) >> 16);
  const uint32_t f_exp = f & 0x7f800000u;
  uint32_t f_sig = f & 0x007fffffu;

  if (f_exp >= 0x47800000u) {  // overflows the half range, or inf/nan
    if (f_exp == 0x7f800000u && f_sig != 0) {
      uint16_t ret = static_cast<uint16_t>(0x7c00u + (f_sig >> 13));
      ret += (ret == 0x7c00u);  // keep NaN a NaN after truncation
      return static_cast<uint16_t>(h_sgn + ret);
    }
    return static_cast<uint16_t>(h_sgn + 0x7c00u);
  }

  if (f_exp <= 0x38000000u) {  // subnormal half or zero
    if (f_exp < 0x33000000u) return h_sgn;  // underflows to signed zero
    f_sig |= 0x00800000u;
    f_sig >>= (113u - (f_exp >> 23));
    // round to nearest, ties to even
    if ((f_sig & 0x00003fffu) != 0x00001000u) f_sig += 0x00001000u;
    return static_cast<uint16_t>(h_sgn + (f_sig >> 13));
  }

  const uint16_t h_exp = static_cast<uint16_t>((f_exp - 0x38000000u) >> 13);
  if ((f_sig & 0x00003fffu) != 0x00001000u) f_sig += 0x00001000u;
  // a carry out of the significand bumps the exponent, which is the
  // correct rounded result (including spill to infinity)
  return static_cast<uint16_t>(h_sgn + h_exp + static_cast<uint16_t>(f_sig >> 13));
}

inline float f16_bits_to_f32(uint16_t h) {
  const uint32_t sign = static_cast<uint32_t>(h & 0x8000u) << 16;
  const uint32_t exp = (h >> 10) & 0x1fu;
  uint32_t mant = h & 0x3ffu;
  uint32_t f;
  if (exp == 0) {
    if (mant == 0) {
      f = sign;
    } else {  // subnormal: renormalize
      int e = -1;
      do {
        mant <<= 1;
        ++e;
      } while (!(mant & 0x400u));
      f = sign | ((127u - 15u - static_cast<uint32_t>(e)) << 23) | ((mant & 0x3ffu) << 13);
    }
  } else if (exp == 0x1f) {
    f = sign | 0x7f800000u | (mant << 13);
  } else {
    f = sign | ((exp - 15u + 127u) << 23) | (mant << 13);
  }
  float out;
  std::memcpy(&out, &f, sizeof out);
  return out;
}

// Rounds a float to the nearest representable f16 value.
inline float f16_round(float value) { return f16_bits_to_f32(f32_to_f16_bits(value)); }

}  // namespace ukgen
