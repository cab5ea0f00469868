#pragma once

// Data plumbing: an ISIC-style corpus scanner (images, optional expert masks,
// optional label CSV) and a seeded phantom generator that produces images with
// analytically known ground truth for testing every stage of the pipeline.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "lesionseg/classify.hpp"
#include "lesionseg/csv.hpp"
#include "lesionseg/raster.hpp"

namespace lesionseg {

struct CorpusEntry {
    std::string id;
    std::filesystem::path image_path;
    std::optional<std::filesystem::path> mask_path;
    std::optional<Label> label;
};

struct Corpus {
    std::vector<CorpusEntry> entries;       // sorted by id
    std::vector<std::string> warnings;      // unmatched masks/labels etc.
};

inline std::optional<Label> parse_label(const std::string& s) {
    if (s == "benign") return Label::benign;
    if (s == "malignant") return Label::malignant;
    return std::nullopt;
}

/// Scans `root` for .png/.jpg/.jpeg images, pairs each id (file stem) with a
/// mask named per `mask_pattern` ("{id}" is substituted) and with a label from
/// the optional CSV (header: id,label). Duplicate ids and malformed label rows
/// are errors; labels or masks that match no image are collected as warnings.
/// Entry order is independent of directory iteration order.
inline Corpus load_corpus(const std::filesystem::path& root,
                          const std::optional<std::filesystem::path>& labels_csv = std::nullopt,
                          const std::string& mask_pattern = "{id}_Segmentation.png") {
    namespace fs = std::filesystem;
    if (!fs::is_directory(root))
        throw std::runtime_error("load_corpus: not a directory: " + root.string());

    const auto marker = mask_pattern.find("{id}");
    if (marker == std::string::npos)
        throw std::invalid_argument("load_corpus: mask_pattern must contain {id}");
    const std::string mask_prefix = mask_pattern.substr(0, marker);
    const std::string mask_suffix = mask_pattern.substr(marker + 4);

    auto mask_id = [&](const std::string& name) -> std::optional<std::string> {
        if (name.size() <= mask_prefix.size() + mask_suffix.size()) return std::nullopt;
        if (name.compare(0, mask_prefix.size(), mask_prefix) != 0) return std::nullopt;
        if (name.compare(name.size() - mask_suffix.size(), mask_suffix.size(), mask_suffix) != 0)
            return std::nullopt;
        return name.substr(mask_prefix.size(),
                           name.size() - mask_prefix.size() - mask_suffix.size());
    };
    auto lower = [](std::string s) {
        std::transform(s.begin(), s.end(), s.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        return s;
    };

    std::map<std::string, CorpusEntry> by_id;
    std::map<std::string, fs::path> masks;
    Corpus corpus;
    for (const auto& de : fs::directory_iterator(root)) {
        if (!de.is_regular_file()) continue;
        const std::string name = de.path().filename().string();
        if (auto id = mask_id(name)) {
            masks[*id] = de.path();
            continue;
        }
        const std::string ext = lower(de.path().extension().string());
        if (ext != ".png" && ext != ".jpg" && ext != ".jpeg") continue;
        const std::string id = de.path().stem().string();
        if (by_id.count(id))
            throw std::runtime_error("load_corpus: duplicate id '" + id + "'");
        by_id[id] = CorpusEntry{id, de.path(), std::nullopt, std::nullopt};
    }

    for (auto& [id, path] : masks) {
        auto it = by_id.find(id);
        if (it == by_id.end())
            corpus.warnings.push_back("mask without image: " + path.filename().string());
        else
            it->second.mask_path = path;
    }

    if (labels_csv) {
        const CsvTable table = read_csv(labels_csv->string());
        if (table.header.size() < 2 || table.header[0] != "id" || table.header[1] != "label")
            throw std::runtime_error("load_corpus: label CSV must have header id,label");
        std::map<std::string, Label> seen;
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
            const std::string& id = table.rows[r][0];
            const auto label = parse_label(table.rows[r][1]);
            // +2: one for the header line, one for 1-based numbering
            if (!label)
                throw std::runtime_error(labels_csv->string() + ":" + std::to_string(r + 2) +
                                         ": unknown label '" + table.rows[r][1] + "'");
            if (seen.count(id))
                throw std::runtime_error(labels_csv->string() + ":" + std::to_string(r + 2) +
                                         ": duplicate id '" + id + "'");
            seen.emplace(id, *label);
            auto it = by_id.find(id);
            if (it == by_id.end())
                corpus.warnings.push_back("label without image: " + id);
            else
                it->second.label = *label;
        }
    }

    corpus.entries.reserve(by_id.size());
    for (auto& [id, entry] : by_id) corpus.entries.push_back(std::move(entry));
    return corpus;
}

// ---------------------------------------------------------------------------
// Phantom images
// ---------------------------------------------------------------------------

enum class PhantomKind { disk, halo_disk, hairy_disk, salt_pepper_disk, bubble_disk, two_tone };

/// Parameters of one synthetic test image. Geometry is analytic, all
/// randomness flows from `seed`, and the ground-truth mask is derived from the
/// same geometry that paints the pixels. Phantoms with boundary wobble or
/// internal colour noise model variegated lesions and are labelled malignant.
struct Phantom {
    PhantomKind kind = PhantomKind::disk;
    int width = 100, height = 100;
    double cx = 50.0, cy = 50.0;
    double radius = 20.0;
    Rgb lesion{70, 50, 40};
    Rgb field{235, 228, 220};

    // halo_disk: ring of intermediate intensity between radius and halo_outer,
    // with a two-level checker texture in the blue channel
    double halo_outer = 28.5;
    Rgb halo_lo{190, 168, 140};
    Rgb halo_hi{198, 176, 160};

    // hairy_disk
    int hair_count = 3;
    Rgb hair{28, 24, 20};

    // salt_pepper_disk: bright specks anywhere, dark specks on the background
    double salt_fraction = 0.04;
    double pepper_fraction = 0.02;

    // bubble_disk: bright blob inside the lesion (specular artifact)
    double bubble_radius = 4.0;
    Rgb bubble{240, 240, 245};

    // irregular/variegated lesions
    double wobble_amp = 0.0;   // radial modulation, fraction of radius
    double noise_amp = 0.0;    // uniform per-channel jitter inside the lesion

    // two_tone: vertical split at cx with two flat intensities
    Rgb tone_left{90, 90, 90};
    Rgb tone_right{170, 170, 170};

    std::uint32_t seed = 0;
};

struct PhantomSample {
    RasterImage image;
    BinaryMask truth;
    Label label = Label::benign;
};

namespace detail {

inline std::uint8_t jitter(std::uint8_t v, double amp, std::mt19937& rng) {
    std::uniform_real_distribution<double> d(-amp, amp);
    return static_cast<std::uint8_t>(quantize_value(v + d(rng)));
}

}  // namespace detail

inline PhantomSample make_phantom(const Phantom& p) {
    if (p.width < 8 || p.height < 8) throw std::invalid_argument("make_phantom: canvas too small");
    if (!(p.radius > 0)) throw std::invalid_argument("make_phantom: radius must be positive");

    std::mt19937 rng(p.seed);
    PhantomSample out;
    out.image = RasterImage(p.width, p.height, p.field);
    out.truth = BinaryMask(p.width, p.height);
    out.label = (p.wobble_amp > 0.0 || p.noise_amp > 0.0) ? Label::malignant : Label::benign;

    if (p.kind == PhantomKind::two_tone) {
        const double lum_l = 0.299 * p.tone_left.r + 0.587 * p.tone_left.g + 0.114 * p.tone_left.b;
        const double lum_r =
            0.299 * p.tone_right.r + 0.587 * p.tone_right.g + 0.114 * p.tone_right.b;
        const bool left_darker = lum_l < lum_r;
        for (int y = 0; y < p.height; ++y)
            for (int x = 0; x < p.width; ++x) {
                const bool left = x < p.cx;
                out.image.at(x, y) = left ? p.tone_left : p.tone_right;
                out.truth.set(x, y, left == left_darker);
            }
        return out;
    }

    // radial boundary, optionally wobbled with two incommensurate harmonics so
    // the outline is genuinely asymmetric
    auto lesion_radius = [&](double theta) {
        if (p.wobble_amp <= 0.0) return p.radius;
        const double m = 0.6 * std::sin(3.0 * theta + 0.7) + 0.4 * std::sin(5.0 * theta + 2.1);
        return p.radius * (1.0 + p.wobble_amp * m);
    };
    auto inside_lesion = [&](int x, int y) {
        const double dx = x - p.cx, dy = y - p.cy;
        const double r = std::hypot(dx, dy);
        return r <= lesion_radius(std::atan2(dy, dx));
    };
    const bool has_halo = p.kind == PhantomKind::halo_disk;
    auto inside_halo = [&](int x, int y) {
        if (!has_halo) return false;
        const double r = std::hypot(x - p.cx, y - p.cy);
        return r <= p.halo_outer && !inside_lesion(x, y);
    };

    for (int y = 0; y < p.height; ++y)
        for (int x = 0; x < p.width; ++x) {
            if (inside_lesion(x, y)) {
                out.image.at(x, y) = p.lesion;
                out.truth.set(x, y, true);
            } else if (inside_halo(x, y)) {
                out.image.at(x, y) = (x + y) % 2 == 0 ? p.halo_lo : p.halo_hi;
                out.truth.set(x, y, true);  // the faint rim belongs to the lesion
            }
        }

    if (p.noise_amp > 0.0) {
        for (int y = 0; y < p.height; ++y)
            for (int x = 0; x < p.width; ++x) {
                if (!out.truth.at(x, y)) continue;
                Rgb& px = out.image.at(x, y);
                px.r = detail::jitter(px.r, p.noise_amp, rng);
                px.g = detail::jitter(px.g, p.noise_amp, rng);
                px.b = detail::jitter(px.b, p.noise_amp, rng);
            }
    }

    if (p.kind == PhantomKind::bubble_disk && p.bubble_radius > 0.0) {
        // offset toward the upper-left third of the lesion, fully inside it
        const double bx = p.cx - p.radius * 0.35, by = p.cy - p.radius * 0.25;
        for (int y = 0; y < p.height; ++y)
            for (int x = 0; x < p.width; ++x)
                if (std::hypot(x - bx, y - by) <= p.bubble_radius) out.image.at(x, y) = p.bubble;
    }

    if (p.kind == PhantomKind::salt_pepper_disk) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::uniform_int_distribution<int> bright(225, 255), dark(15, 45);
        for (int y = 0; y < p.height; ++y)
            for (int x = 0; x < p.width; ++x) {
                const double roll = u(rng);
                if (roll < p.salt_fraction) {
                    const auto v = static_cast<std::uint8_t>(bright(rng));
                    out.image.at(x, y) = Rgb{v, v, v};
                } else if (roll < p.salt_fraction + p.pepper_fraction && !out.truth.at(x, y)) {
                    const auto v = static_cast<std::uint8_t>(dark(rng));
                    out.image.at(x, y) = Rgb{v, v, v};
                }
            }
    }

    if (p.kind == PhantomKind::hairy_disk && p.hair_count > 0) {
        std::uniform_real_distribution<double> angle(0.0, M_PI);
        std::uniform_real_distribution<double> offset(-0.35, 0.35);
        for (int i = 0; i < p.hair_count; ++i) {
            // line through a jittered center point, crossing the whole frame
            const double th = angle(rng);
            const double ox = p.width * (0.5 + offset(rng));
            const double oy = p.height * (0.5 + offset(rng));
            const double dx = std::cos(th), dy = std::sin(th);
            const double reach = p.width + p.height;
            for (double t = -reach; t <= reach; t += 0.5) {
                const int x = static_cast<int>(std::lround(ox + t * dx));
                const int y = static_cast<int>(std::lround(oy + t * dy));
                if (x >= 0 && x < p.width && y >= 0 && y < p.height)
                    out.image.at(x, y) = p.hair;
            }
        }
    }

    return out;
}

struct NamedPhantom {
    std::string id;
    Phantom spec;
    PhantomSample sample;
};

/// The 30-image synthetic evaluation suite: faint-rim (halo), salt-and-pepper,
/// hairy and bubble phantoms with varied geometry. Ground truth is exact, so
/// segmentation quality ordering can be measured without any external data.
inline std::vector<NamedPhantom> standard_phantom_suite(std::uint32_t seed = 7) {
    std::vector<NamedPhantom> suite;
    auto add = [&](const std::string& id, const Phantom& spec) {
        suite.push_back(NamedPhantom{id, spec, make_phantom(spec)});
    };
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> center(44.0, 56.0);

    for (int i = 0; i < 8; ++i) {
        Phantom p;
        p.kind = PhantomKind::halo_disk;
        p.radius = 19.0 + i * 0.75;
        p.halo_outer = p.radius + 7.0 + 0.25 * i;
        p.cx = center(rng);
        p.cy = center(rng);
        p.seed = seed + i;
        add("halo" + std::to_string(i), p);
    }
    for (int i = 0; i < 8; ++i) {
        Phantom p;
        p.kind = PhantomKind::salt_pepper_disk;
        p.radius = 16.0 + i;
        p.salt_fraction = 0.02 + 0.005 * i;
        p.pepper_fraction = 0.01 + 0.003 * i;
        p.cx = center(rng);
        p.cy = center(rng);
        p.seed = seed + 100 + i;
        if (i % 2 == 1) p.noise_amp = 18.0;  // variegated variants
        add("salt" + std::to_string(i), p);
    }
    for (int i = 0; i < 7; ++i) {
        Phantom p;
        p.kind = PhantomKind::hairy_disk;
        p.radius = 17.0 + i;
        p.hair_count = 2 + i % 4;
        p.cx = center(rng);
        p.cy = center(rng);
        p.seed = seed + 200 + i;
        add("hair" + std::to_string(i), p);
    }
    for (int i = 0; i < 7; ++i) {
        Phantom p;
        p.kind = PhantomKind::bubble_disk;
        p.radius = 18.0 + i;
        p.bubble_radius = 3.0 + 0.5 * i;
        p.cx = center(rng);
        p.cy = center(rng);
        p.seed = seed + 300 + i;
        add("bubble" + std::to_string(i), p);
    }
    return suite;
}

/// A deliberately separable 20-image corpus: bland uniform disks (benign)
/// against wobbly, colour-noisy blobs (malignant). Used to exercise the
/// feature/classifier path end to end.
inline std::vector<NamedPhantom> separable_corpus(std::uint32_t seed = 11) {
    std::vector<NamedPhantom> corpus;
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> center(44.0, 56.0);
    for (int i = 0; i < 10; ++i) {
        Phantom p;
        p.radius = 16.0 + 0.8 * i;
        p.cx = center(rng);
        p.cy = center(rng);
        p.seed = seed + i;
        corpus.push_back(NamedPhantom{"benign" + std::to_string(i), p, make_phantom(p)});
    }
    for (int i = 0; i < 10; ++i) {
        Phantom p;
        p.radius = 16.0 + 0.8 * i;
        p.cx = center(rng);
        p.cy = center(rng);
        p.wobble_amp = 0.22 + 0.01 * i;
        p.noise_amp = 52.0;
        p.seed = seed + 50 + i;
        corpus.push_back(NamedPhantom{"malig" + std::to_string(i), p, make_phantom(p)});
    }
    return corpus;
}

}  // namespace lesionseg
