#pragma once

#include "autodetect/error.hpp"

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace autodetect {

struct ObjectAnnotation {
    int class_id = 0;
    std::array<int, 4> bbox{};  // x, y, w, h in pixels, origin top-left

    friend bool operator==(const ObjectAnnotation&, const ObjectAnnotation&) = default;
};

struct ManifestRecord {
    std::string image;  // relative to the manifest's directory
    std::vector<ObjectAnnotation> objects;
    bool poisoned = false;

    friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;
};

/// A JSONL dataset index. `base_dir` is the directory image paths resolve
/// against (the manifest file's parent).
struct Manifest {
    std::filesystem::path base_dir;
    std::vector<ManifestRecord> records;

    std::filesystem::path resolve(const ManifestRecord& r) const { return base_dir / r.image; }
    std::size_t size() const { return records.size(); }
};

class ManifestError : public Error {
public:
    using Error::Error;
};

Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

/// One JSON object per record, no trailing whitespace, '\n'-terminated.
std::string manifest_line(const ManifestRecord& record);
ManifestRecord parse_manifest_line(const std::string& line);

}  // namespace autodetect
