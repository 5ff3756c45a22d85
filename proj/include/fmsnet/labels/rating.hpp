#pragma once

#include <string>

namespace fmsnet::labels {

/// One rater's score for one repetition. Scores are FMS ratings 1, 2 or 3.
struct RatingRecord {
  std::string repetition_id;
  std::string rater_id;
  int score = 0;

  friend bool operator==(const RatingRecord&, const RatingRecord&) = default;
};

}  // namespace fmsnet::labels
