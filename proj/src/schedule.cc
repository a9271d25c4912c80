#include "beliefplay/schedule.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "beliefplay/errors.h"

namespace beliefplay {

long GapFunction::operator()(long t) const {
  double v = scale * std::pow(static_cast<double>(t), exponent) + offset;
  return std::max(1L, static_cast<long>(std::floor(v)));
}

UpdateSchedule UpdateSchedule::every_stage() { return UpdateSchedule(); }

UpdateSchedule UpdateSchedule::fixed_batch(long batch) {
  if (batch < 1) throw ContractError("batch size must be positive");
  UpdateSchedule s;
  s.kind_ = Kind::kFixedBatch;
  s.batch_ = batch;
  return s;
}

UpdateSchedule UpdateSchedule::geometric(double p) {
  if (!(p > 0.0 && p <= 1.0)) throw ContractError("geometric p must lie in (0, 1]");
  UpdateSchedule s;
  s.kind_ = Kind::kGeometric;
  s.p_ = p;
  return s;
}

UpdateSchedule UpdateSchedule::two_timescale(GapFunction gap) {
  if (!gap.nondecreasing()) throw ContractError("gap function must be nondecreasing");
  UpdateSchedule s;
  s.kind_ = Kind::kTwoTimescale;
  s.gap_ = gap;
  return s;
}

void UpdateSchedule::reset(long index, long stage) {
  if (index < 1 || stage < 1) throw ContractError("schedule counters start at 1");
  index_ = index;
  last_ = stage;
}

long next_update_stage(UpdateSchedule& schedule, Rng& rng) {
  long gap = 1;
  switch (schedule.kind_) {
    case UpdateSchedule::Kind::kEveryStage:
      break;
    case UpdateSchedule::Kind::kFixedBatch:
      gap = schedule.batch_;
      break;
    case UpdateSchedule::Kind::kGeometric: {
      std::geometric_distribution<long> draw(schedule.p_);
      gap = 1 + draw(rng);
      break;
    }
    case UpdateSchedule::Kind::kTwoTimescale:
      gap = schedule.gap_(schedule.index_);
      break;
  }
  schedule.last_ += gap;
  schedule.index_ += 1;
  return schedule.last_;
}

}  // namespace beliefplay
