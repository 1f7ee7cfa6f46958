#pragma once

// Device parameters shared by the unit tests; same values as configs/device.json.

#include "emtwin/calibration.hpp"
#include "emtwin/lineshape.hpp"
#include "emtwin/spectra.hpp"
#include "emtwin/squid_resonator.hpp"
#include "emtwin/units.hpp"

namespace fixture {

inline const emtwin::SquidParams squid{0.44e-6, 0.0};
inline const emtwin::ResonatorGeometry geometry{7803315344.518355, 245.72700618582053};
inline const emtwin::FluxAxis axis{-2.541294570833538e-18, 1.7e-12};
inline const emtwin::MechanicalMode mode(6.34311e6, 33.6, 0.6e-15, 20e-6, 0.99);
inline const emtwin::LineshapeParams line_k{6.887e9, 0.45e6, 5.55e6};
inline const emtwin::LineshapeParams line_d{7.45e9, 0.45e6, 2.05e6};
inline const emtwin::CalibrationTone tone{6.34111e6, 3.94e-4};
inline const emtwin::DetectionChain chain{4.021153981566365e-18, 5e-14, 0.004983040607536874};
inline constexpr double temperature = 0.185;

}  // namespace fixture
