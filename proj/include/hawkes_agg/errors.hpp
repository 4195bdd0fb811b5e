#pragma once

#include <stdexcept>
#include <string>

namespace hawkes_agg {

// Parameters fail the spectral-radius stationarity condition rho(alpha/beta) < 1.
class stationarity_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Input data is unusable: empty where content is required, malformed, or out of range.
class data_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Proposal bookkeeping disagrees with the observed counts it must reproduce.
class consistency_error : public data_error {
 public:
  using data_error::data_error;
};

// A numerical routine broke down (singular system, non-finite objective, failed solve).
class numerical_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hawkes_agg
