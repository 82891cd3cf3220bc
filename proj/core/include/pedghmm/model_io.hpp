#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "pedghmm/ghmm.hpp"
#include "pedghmm/topology.hpp"

namespace pedghmm {

inline constexpr std::uint32_t kModelFormatVersion = 1;

/// A model together with the topology it tracks.
struct ModelBundle {
  GhmmModel model;
  std::optional<TopologicalMap> topology;
};

/// Little-endian binary container: "GHMM", version, model parts with the
/// transition matrix as (from, to) triplets, then an optional topology
/// snapshot.
void write_bundle(std::ostream& out, const GhmmModel& model, const TopologicalMap* topology = nullptr);
ModelBundle read_bundle(std::istream& in, const std::string& source = "<model>");

void save_bundle(const std::filesystem::path& path, const GhmmModel& model, const TopologicalMap* topology = nullptr);
ModelBundle load_bundle(const std::filesystem::path& path);

/// Serialized bytes of the model alone.
std::string model_bytes(const GhmmModel& model);

/// Line-oriented lossless dump for diffing.
void dump_model_text(const GhmmModel& model, std::ostream& out);
std::string model_text(const GhmmModel& model);

}  // namespace pedghmm
