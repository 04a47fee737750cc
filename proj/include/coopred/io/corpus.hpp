#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "coopred/scene.hpp"

namespace coopred {

/// Sidecar describing a corpus file. The hash covers the corpus bytes, so any
/// single-byte mutation is detected.
struct CorpusManifest {
  std::string corpus_path;
  std::string split;  // train | val | test
  int scene_count = 0;
  std::uint64_t content_hash = 0;
  int schema_version = 1;
};

/// Writes scenes as JSON lines, one scene per line, in the documented schema.
/// Deterministic: the same scenes always produce identical bytes.
void write_corpus(const std::vector<Scene>& scenes, const std::string& path);

/// Reads a JSON-lines corpus. A malformed line raises std::runtime_error
/// naming the 1-based line number. An empty file yields an empty corpus.
std::vector<Scene> read_corpus(const std::string& path);

/// FNV-1a (64-bit) over the file's bytes. Throws on unreadable path.
std::uint64_t fnv1a_file(const std::string& path);

CorpusManifest make_manifest(const std::string& corpus_path, const std::string& split);
void write_manifest(const CorpusManifest& manifest, const std::string& path);
CorpusManifest read_manifest(const std::string& path);

/// Structural equality over every field, used by round-trip checks.
bool scenes_equal(const Scene& a, const Scene& b);

}  // namespace coopred
