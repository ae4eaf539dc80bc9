#pragma once

#include <memory>
#include <string>

#include "chordlab/model.hpp"

namespace chordlab {

class MarkovModel;
class VomModel;
class NeuralModel;

// Model checkpoints are JSON documents. Statistical models carry a "type"
// field and sparse count triples; neural models carry a "kind" field plus
// named parameter tensors. Floats round-trip exactly.
void save_checkpoint(const MarkovModel& model, const std::string& path);
void save_checkpoint(const VomModel& model, const std::string& path);
void save_checkpoint(const NeuralModel& model, const std::string& path);

// Loads either family. Throws CorruptCheckpoint on malformed or truncated
// files, VersionMismatch on unknown format versions.
std::unique_ptr<PredictorModel> load_model(const std::string& path);

// Throws VersionMismatch when the file holds a statistical checkpoint.
std::unique_ptr<NeuralModel> load_neural_model(const std::string& path);

}  // namespace chordlab
