#pragma once

#include <cmath>

#include "ebuf/errors.hpp"

namespace ebuf {

// Uplink Nakagami-m fading channel at rate R bits/use: an outage occurs when
// the instantaneous SNR P_UL * h / sigma2 falls below gamma_thr = 2^R - 1.
struct UplinkChannel {
  int m_ul = 1;
  double omega_ul = 1.0;  // mean channel power gain
  double sigma2 = 1.0;    // noise power, linear units
  double rate = 1.0;      // R, bits per channel use
  double gamma_thr = 1.0;
  double Gamma_thr = 1.0;  // m_ul * gamma_thr * sigma2 / omega_ul

  UplinkChannel() = default;
  UplinkChannel(int m_ul_, double omega_ul_, double sigma2_, double rate_)
      : m_ul(m_ul_), omega_ul(omega_ul_), sigma2(sigma2_), rate(rate_) {
    if (m_ul < 1 || !(omega_ul > 0.0) || !(sigma2 > 0.0) || !(rate > 0.0))
      throw config_error("UplinkChannel: need m_ul >= 1 and positive "
                         "omega_ul, sigma2, rate");
    gamma_thr = std::exp2(rate) - 1.0;
    Gamma_thr = m_ul * gamma_thr * sigma2 / omega_ul;
  }
};

}  // namespace ebuf
