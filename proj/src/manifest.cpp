#include "autodetect/manifest.hpp"

#include <json.hpp>

#include <fstream>

namespace autodetect {

using nlohmann::json;

std::string manifest_line(const ManifestRecord& record) {
    json objects = json::array();
    for (const auto& o : record.objects) {
        objects.push_back({{"class", o.class_id}, {"bbox", o.bbox}});
    }
    json j = {{"image", record.image}, {"objects", objects}, {"poisoned", record.poisoned}};
    return j.dump() + "\n";
}

ManifestRecord parse_manifest_line(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw ManifestError(std::string("malformed manifest line: ") + e.what());
    }
    try {
        ManifestRecord r;
        r.image = j.at("image").get<std::string>();
        if (j.contains("objects")) {
            for (const auto& o : j.at("objects")) {
                ObjectAnnotation a;
                a.class_id = o.at("class").get<int>();
                a.bbox = o.at("bbox").get<std::array<int, 4>>();
                r.objects.push_back(a);
            }
        }
        r.poisoned = j.value("poisoned", false);
        if (r.image.empty()) throw ManifestError("manifest record has an empty image path");
        return r;
    } catch (const json::exception& e) {
        throw ManifestError(std::string("invalid manifest record: ") + e.what());
    }
}

Manifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest " + path.string());
    Manifest m;
    m.base_dir = path.parent_path();
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            m.records.push_back(parse_manifest_line(line));
        } catch (const ManifestError& e) {
            throw ManifestError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return m;
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write manifest " + path.string());
    for (const auto& r : manifest.records) out << manifest_line(r);
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace autodetect
