#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "mbcnn/losses.hpp"
#include "mbcnn/model.hpp"
#include "mbcnn/optim.hpp"
#include "mbcnn/synth.hpp"

namespace mbcnn {

struct TrainConfig {
  int patch = 128;
  int batch = 16;
  double lr = 1e-4;
  int epochs_max = 100;
  std::uint64_t seed = 0;
  bool stage2 = false;
  LossConfig loss = default_loss_config(LossVariant::kL1Asl);
};

// Stage 1: 128px patches, batch 16, lr 1e-4. Stage 2 fine-tuning: 256px
// patches, batch 4, lr 1e-5.
TrainConfig make_train_config(bool stage2);

struct EpochStats {
  int epoch = 0;
  double lr = 0;
  double train_loss = 0;
  double val_psnr = 0;
  double val_ssim = 0;
};

struct ValStats {
  double psnr = 0;
  double ssim = 0;
};

struct TrainResult {
  Model model;  // parameters of the best validation epoch
  std::vector<EpochStats> log;
  double best_psnr = 0;
  int best_epoch = 0;
  bool stopped_early = false;
};

// One Adam step on an explicit (moire, clean) batch; returns the multiscale
// loss evaluated before the update.
float train_step(Model& m, const Tensor& moire_batch, const Tensor& clean_batch,
                 const LossConfig& loss, AdamState& st);

using InferFn = std::function<Tensor(const Tensor&)>;

// Full-image validation: reflect-pad each input to a legal size, run `f`,
// crop back, clamp, and average PSNR/SSIM against the clean images.
ValStats validate_with(const InferFn& f, const std::vector<MoirePair>& val_set);
ValStats validate(const Model& m, const std::vector<MoirePair>& val_set);

// Epochs of shuffled one-crop-per-image batches with per-epoch validation
// driving the plateau schedule. Returns the best model and the epoch log.
// on_epoch, when set, observes each log entry as it is produced.
using EpochHook = std::function<void(const EpochStats&)>;
TrainResult train(Model model, const TrainConfig& cfg,
                  const std::vector<MoirePair>& train_set,
                  const std::vector<MoirePair>& val_set,
                  const EpochHook& on_epoch = {});

}  // namespace mbcnn
