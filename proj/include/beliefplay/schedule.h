#ifndef BELIEFPLAY_SCHEDULE_H_
#define BELIEFPLAY_SCHEDULE_H_

#include "beliefplay/rng.h"

namespace beliefplay {

// g(t) = max(1, floor(scale * t^exponent + offset)).
struct GapFunction {
  double scale = 1.0;
  double exponent = 1.0;
  double offset = 0.0;

  static GapFunction constant(double value) { return {0.0, 0.0, value}; }
  static GapFunction linear(double scale, double offset = 0.0) {
    return {scale, 1.0, offset};
  }
  static GapFunction power(double scale, double exponent) {
    return {scale, exponent, 0.0};
  }

  long operator()(long t) const;
  bool nondecreasing() const { return scale >= 0.0 && exponent >= 0.0; }
  bool unbounded() const { return scale > 0.0 && exponent > 0.0; }
};

// Generator of the update stages k_1 = 1 < k_2 < ... with its counter.
class UpdateSchedule {
 public:
  enum class Kind { kEveryStage, kFixedBatch, kGeometric, kTwoTimescale };

  static UpdateSchedule every_stage();
  static UpdateSchedule fixed_batch(long batch);
  static UpdateSchedule geometric(double p);
  static UpdateSchedule two_timescale(GapFunction gap);

  Kind kind() const { return kind_; }
  long batch() const { return batch_; }
  double p() const { return p_; }
  const GapFunction& gap() const { return gap_; }

  // Positions the counter at k_index = stage.
  void reset(long index, long stage);
  long index() const { return index_; }
  long last() const { return last_; }

 private:
  friend long next_update_stage(UpdateSchedule& schedule, Rng& rng);

  Kind kind_ = Kind::kEveryStage;
  long batch_ = 1;
  double p_ = 1.0;
  GapFunction gap_;
  long index_ = 1;
  long last_ = 1;
};

// Returns k_{index+1} and advances the counter.
long next_update_stage(UpdateSchedule& schedule, Rng& rng);

}  // namespace beliefplay

#endif  // BELIEFPLAY_SCHEDULE_H_
