#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mbcnn/synth.hpp"
#include "mbcnn/tensor.hpp"

namespace mbcnn {

struct DiskPair {
  std::string id;
  Tensor moire;
  Tensor clean;
};

// Writes {id}_moire.png / {id}_clean.png per pair plus a manifest.csv with
// id,seed rows. Ids are zero-padded indices.
void write_dataset(const std::string& dir, const std::vector<MoirePair>& pairs);

// Loads every *_moire.png with its *_clean.png partner, sorted by id.
// A moire image without its clean partner is an error.
std::vector<DiskPair> read_pairs(const std::string& dir);

}  // namespace mbcnn
