#include "autodetect/poison.hpp"

#include "autodetect/image_io.hpp"
#include "autodetect/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

namespace autodetect::poison {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Mode m) { return m == Mode::replace ? "replace" : "append"; }

Mode parse_mode(std::string_view s) {
    if (s == "replace") return Mode::replace;
    if (s == "append") return Mode::append;
    throw Error("unknown poisoning mode '" + std::string(s) + "'");
}

Placement parse_placement(std::string_view s) {
    if (s == "random") return Placement::random();
    if (s == "top_left") return Placement::top_left();
    const auto comma = s.find(',');
    if (comma != std::string_view::npos) {
        try {
            std::size_t used_x = 0, used_y = 0;
            const std::string xs(s.substr(0, comma));
            const std::string ys(s.substr(comma + 1));
            const int x = std::stoi(xs, &used_x);
            const int y = std::stoi(ys, &used_y);
            if (used_x == xs.size() && used_y == ys.size()) return Placement::at(x, y);
        } catch (const std::logic_error&) {
        }
    }
    throw Error("invalid placement '" + std::string(s) + "' (expected random, top_left or x,y)");
}

ImageTensor blend_patch(const ImageTensor& img, const synth::Patch& patch, Position pos, double alpha) {
    const int side = patch.side();
    if (patch.image.channels() != img.channels()) {
        throw Error("patch has " + std::to_string(patch.image.channels()) + " channels, image has " +
                    std::to_string(img.channels()));
    }
    if (pos.x < 0 || pos.y < 0 || pos.x > img.width() - side || pos.y > img.height() - side) {
        throw Error("patch of side " + std::to_string(side) + " at (" + std::to_string(pos.x) + "," +
                    std::to_string(pos.y) + ") does not fit a " + std::to_string(img.width()) + "x" +
                    std::to_string(img.height()) + " image");
    }
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error("blend alpha must lie in [0, 1]");

    ImageTensor out = img;
    for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
            for (int c = 0; c < img.channels(); ++c) {
                const double region = img.at(pos.y + y, pos.x + x, c);
                const double p = patch.image.at(y, x, c);
                out.set(pos.y + y, pos.x + x, c, static_cast<float>((1.0 - alpha) * region + alpha * p));
            }
        }
    }
    return out;
}

Position sample_position(RngState& rng, ImageDims dims, int patch_side, const Placement& placement) {
    if (patch_side > dims.height || patch_side > dims.width) {
        throw Error("patch side " + std::to_string(patch_side) + " exceeds image " + std::to_string(dims.width) +
                    "x" + std::to_string(dims.height));
    }
    switch (placement.kind) {
        case Placement::Kind::top_left: return {0, 0};
        case Placement::Kind::fixed: {
            const auto p = placement.fixed;
            if (p.x < 0 || p.y < 0 || p.x > dims.width - patch_side || p.y > dims.height - patch_side) {
                throw Error("fixed patch position (" + std::to_string(p.x) + "," + std::to_string(p.y) +
                            ") is out of bounds");
            }
            return p;
        }
        case Placement::Kind::random: break;
    }
    const auto x = static_cast<int>(rng_below(rng, static_cast<std::uint64_t>(dims.width - patch_side + 1)));
    const auto y = static_cast<int>(rng_below(rng, static_cast<std::uint64_t>(dims.height - patch_side + 1)));
    return {x, y};
}

std::size_t poison_count(double rate, std::size_t n) {
    if (!(rate >= 0.0 && rate <= 1.0)) throw Error("poison rate must lie in [0, 1]");
    const auto k = static_cast<std::size_t>(std::floor(rate * static_cast<double>(n) + 0.5));
    return std::min(k, n);
}

PoisonPlan plan_poisoning(std::span<const ImageDims> dims, const PoisonConfig& config) {
    if (!(config.alpha >= 0.0 && config.alpha <= 1.0)) throw Error("blend alpha must lie in [0, 1]");
    const int side = config.patch.side();
    if (config.patch.image.empty() || side < 2) throw Error("poisoning requires a patch of side >= 2");
    for (const auto& d : dims) {
        if (side > d.height || side > d.width) {
            throw Error("patch side " + std::to_string(side) + " exceeds a " + std::to_string(d.width) + "x" +
                        std::to_string(d.height) + " image in the manifest");
        }
    }

    const std::size_t n = dims.size();
    const std::size_t k = poison_count(config.rate, n);
    RngState rng{config.seed};

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
        const auto j = i + static_cast<std::size_t>(rng_below(rng, n - i));
        std::swap(order[i], order[j]);
    }
    PoisonPlan plan;
    plan.selected.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(plan.selected.begin(), plan.selected.end());
    for (auto idx : plan.selected) {
        plan.positions.push_back(sample_position(rng, dims[idx], side, config.placement));
    }
    return plan;
}

std::vector<ImageTensor> apply_plan(std::span<const ImageTensor> images, const PoisonPlan& plan,
                                    const PoisonConfig& config) {
    std::vector<ImageTensor> poisoned(plan.selected.size());
    parallel_for(plan.selected.size(), [&](std::size_t i) {
        poisoned[i] = quantize8(blend_patch(images[plan.selected[i]], config.patch, plan.positions[i], config.alpha));
    });

    if (config.mode == Mode::append) {
        std::vector<ImageTensor> out(images.begin(), images.end());
        for (auto& p : poisoned) out.push_back(std::move(p));
        return out;
    }
    std::vector<ImageTensor> out(images.begin(), images.end());
    for (std::size_t i = 0; i < plan.selected.size(); ++i) out[plan.selected[i]] = std::move(poisoned[i]);
    return out;
}

namespace {

std::vector<int> classes_of(const ManifestRecord& r) {
    std::vector<int> out;
    for (const auto& o : r.objects) out.push_back(o.class_id);
    return out;
}

PoisonRecord clean_record(const ManifestRecord& r) {
    PoisonRecord rec;
    rec.image = r.image;
    rec.original_classes = classes_of(r);
    rec.rewritten_classes = rec.original_classes;
    return rec;
}

void copy_into(const fs::path& from, const fs::path& to) {
    std::error_code ec;
    fs::create_directories(to.parent_path(), ec);
    if (fs::exists(to) && fs::equivalent(from, to)) return;
    fs::copy_file(from, to, fs::copy_options::overwrite_existing, ec);
    if (ec) throw IoError("cannot copy " + from.string() + " to " + to.string() + ": " + ec.message());
}

}  // namespace

PoisonResult poison_dataset(const Manifest& manifest, const PoisonConfig& config, const fs::path& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

    const std::size_t n = manifest.size();
    std::vector<ImageDims> dims(n);
    std::vector<ImageTensor> images(n);
    parallel_for(n, [&](std::size_t i) {
        images[i] = load_image(manifest.resolve(manifest.records[i]));
        dims[i] = {images[i].height(), images[i].width()};
    });
    const PoisonPlan plan = plan_poisoning(dims, config);

    std::vector<ManifestRecord> poisoned_records(plan.selected.size());
    std::vector<PoisonRecord> poisoned_truth(plan.selected.size());
    for (std::size_t i = 0; i < plan.selected.size(); ++i) {
        const auto& src = manifest.records[plan.selected[i]];
        char name[32];
        std::snprintf(name, sizeof(name), "poisoned/%05zu_", plan.selected[i]);
        ManifestRecord rec = src;
        rec.image = name + fs::path(src.image).stem().string() + ".png";
        rec.poisoned = true;
        for (auto& o : rec.objects) o.class_id = config.target_class;

        PoisonRecord truth;
        truth.image = rec.image;
        truth.poisoned = true;
        truth.position = plan.positions[i];
        truth.original_classes = classes_of(src);
        truth.rewritten_classes = classes_of(rec);

        poisoned_records[i] = std::move(rec);
        poisoned_truth[i] = std::move(truth);
    }
    if (!plan.selected.empty()) fs::create_directories(out_dir / "poisoned");

    parallel_for(plan.selected.size(), [&](std::size_t i) {
        const auto img = blend_patch(images[plan.selected[i]], config.patch, plan.positions[i], config.alpha);
        save_image(img, out_dir / poisoned_records[i].image, ImageFormat::png);
    });

    std::vector<bool> is_selected(n, false);
    for (auto idx : plan.selected) is_selected[idx] = true;
    const bool keep_all_clean = config.mode == Mode::append;
    parallel_for(n, [&](std::size_t i) {
        if (keep_all_clean || !is_selected[i]) {
            copy_into(manifest.resolve(manifest.records[i]), out_dir / manifest.records[i].image);
        }
    });

    PoisonResult result;
    result.manifest.base_dir = out_dir;
    if (keep_all_clean) {
        for (const auto& r : manifest.records) {
            result.manifest.records.push_back(r);
            result.records.push_back(clean_record(r));
        }
        for (std::size_t i = 0; i < plan.selected.size(); ++i) {
            result.manifest.records.push_back(poisoned_records[i]);
            result.records.push_back(poisoned_truth[i]);
        }
    } else {
        std::size_t next = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (is_selected[i]) {
                result.manifest.records.push_back(poisoned_records[next]);
                result.records.push_back(poisoned_truth[next]);
                ++next;
            } else {
                result.manifest.records.push_back(manifest.records[i]);
                result.records.push_back(clean_record(manifest.records[i]));
            }
        }
    }

    write_manifest(result.manifest, out_dir / "manifest.jsonl");
    write_truth(result.records, out_dir / "truth.jsonl");
    return result;
}

void write_truth(std::span<const PoisonRecord> records, const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& r : records) {
        json j = {{"image", r.image},
                  {"poisoned", r.poisoned},
                  {"original_classes", r.original_classes},
                  {"rewritten_classes", r.rewritten_classes}};
        if (r.position) j["position"] = {r.position->x, r.position->y};
        out << j.dump() << "\n";
    }
    if (!out) throw IoError("write failed for " + path.string());
}

std::vector<PoisonRecord> read_truth(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open ground-truth file " + path.string());
    std::vector<PoisonRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = json::parse(line);
            PoisonRecord r;
            r.image = j.at("image").get<std::string>();
            r.poisoned = j.at("poisoned").get<bool>();
            if (j.contains("position")) {
                const auto p = j.at("position").get<std::array<int, 2>>();
                r.position = Position{p[0], p[1]};
            }
            r.original_classes = j.value("original_classes", std::vector<int>{});
            r.rewritten_classes = j.value("rewritten_classes", std::vector<int>{});
            out.push_back(std::move(r));
        } catch (const json::exception& e) {
            throw Error("invalid ground-truth line in " + path.string() + ": " + e.what());
        }
    }
    return out;
}

}  // namespace autodetect::poison
