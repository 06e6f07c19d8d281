#pragma once

#include <cmath>
#include <stdexcept>

#include "krausscope/common.hpp"

namespace krausscope {

// Frequency-comb source: comb lines are spaced by the repetition frequency;
// the probe uses every component_spacing_multiple-th line.
struct CombSpec {
  double nominal_wavelength;      // length
  double repetition_frequency;    // Hz
  int component_spacing_multiple = 2;

  CombSpec(double wavelength, double rep_freq, int multiple = 2)
      : nominal_wavelength(wavelength), repetition_frequency(rep_freq), component_spacing_multiple(multiple) {
    if (!(nominal_wavelength > 0.0)) throw std::domain_error("CombSpec: wavelength must be positive");
    if (!(repetition_frequency > 0.0)) throw std::domain_error("CombSpec: repetition frequency must be positive");
    if (multiple < 1) throw std::domain_error("CombSpec: spacing multiple must be >= 1");
  }
};

// Illuminated grating lines needed to resolve adjacent comb components:
// N = lambda / delta_lambda with delta_lambda = lambda^2 f_rep / c.
inline double grating_line_count(const CombSpec& comb) {
  return kSpeedOfLight / (comb.nominal_wavelength * comb.repetition_frequency);
}

// Pixels per beam across an SLM holding d beams with blocked gaps between
// them (2d - 1 slots across the width).
inline int slm_pixel_budget(int slm_width_pixels, int dimension) {
  if (slm_width_pixels < 1) throw std::domain_error("slm_pixel_budget: width must be positive");
  if (dimension < 1) throw std::domain_error("slm_pixel_budget: dimension must be >= 1");
  return slm_width_pixels / (2 * dimension - 1);
}

}  // namespace krausscope
