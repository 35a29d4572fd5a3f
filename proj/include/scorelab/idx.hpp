#pragma once

#include <string>

#include "scorelab/datasets.hpp"

namespace scorelab::cli {

// Parses the big-endian IDX container pair (images magic 0x00000803, labels
// magic 0x00000801). Pixels are scaled to [0,1]; pool > 1 mean-pools each
// pool x pool block before flattening (rows and cols must divide evenly).
analytic::LabeledDataset load_idx(const std::string& images_path,
                                  const std::string& labels_path,
                                  int pool = 1);

}  // namespace scorelab::cli
