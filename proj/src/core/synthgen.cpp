#include "core/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "core/rng.hpp"

namespace scafm {

using nlohmann::json;

void SampleSpec::validate() const {
    require(grid_size >= 64, ErrorCode::validation, "grid_size must be >= 64");
    require(extent_um > 0.0, ErrorCode::validation, "extent_um must be positive");
    require(coverage_target > 0.0 && coverage_target <= 1.0, ErrorCode::validation,
            "coverage_target must lie in (0,1]");
    require(nucleation_density >= 0.0 && defect_density >= 0.0, ErrorCode::validation,
            "densities must be >= 0");
    require(crack_count >= 0, ErrorCode::validation, "crack_count must be >= 0");
    require(on_current_nA > off_current_nA && off_current_nA >= 0.0,
            ErrorCode::validation, "require on_current_nA > off_current_nA >= 0");
    require(monolayer_height_nm > 0.0, ErrorCode::validation,
            "monolayer_height_nm must be positive");
    require(noise_sigma >= 0.0, ErrorCode::validation, "noise_sigma must be >= 0");
    require(tip_radius_px >= 0, ErrorCode::validation, "tip_radius_px must be >= 0");
}

SampleSpec SampleSpec::from_json_text(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    require(!j.is_discarded() && j.is_object(), ErrorCode::format,
            "sample spec is not a JSON object");
    SampleSpec s;
    for (auto& [key, val] : j.items()) {
        try {
            if (key == "grid_size") s.grid_size = val.get<int>();
            else if (key == "extent_um") s.extent_um = val.get<double>();
            else if (key == "nucleation_density") s.nucleation_density = val.get<double>();
            else if (key == "coverage_target") s.coverage_target = val.get<double>();
            else if (key == "defect_density") s.defect_density = val.get<double>();
            else if (key == "crack_count") s.crack_count = val.get<int>();
            else if (key == "monolayer_height_nm") s.monolayer_height_nm = val.get<double>();
            else if (key == "on_current_nA") s.on_current_nA = val.get<double>();
            else if (key == "off_current_nA") s.off_current_nA = val.get<double>();
            else if (key == "noise_sigma") s.noise_sigma = val.get<double>();
            else if (key == "tip_radius_px") s.tip_radius_px = val.get<int>();
            else if (key == "rng_seed") s.rng_seed = val.get<uint64_t>();
            else raise(ErrorCode::validation, "unknown sample spec key: " + key);
        } catch (const json::exception& e) {
            raise(ErrorCode::validation, "bad value for spec key '" + key + "': " + e.what());
        }
    }
    s.validate();
    return s;
}

std::string SampleSpec::to_json_text() const {
    json j;
    j["grid_size"] = grid_size;
    j["extent_um"] = extent_um;
    j["nucleation_density"] = nucleation_density;
    j["coverage_target"] = coverage_target;
    j["defect_density"] = defect_density;
    j["crack_count"] = crack_count;
    j["monolayer_height_nm"] = monolayer_height_nm;
    j["on_current_nA"] = on_current_nA;
    j["off_current_nA"] = off_current_nA;
    j["noise_sigma"] = noise_sigma;
    j["tip_radius_px"] = tip_radius_px;
    j["rng_seed"] = rng_seed;
    return j.dump(2);
}

void GroundTruthMask::validate() const {
    size_t n = static_cast<size_t>(height) * width;
    require(height >= 1 && width >= 1, ErrorCode::validation, "mask has empty grid");
    require(film.size() == n && boundaries.size() == n && defects.size() == n &&
                cracks.size() == n,
            ErrorCode::validation, "mask planes must share the grid size");

    // boundaries must lie within a 1-pixel dilation of the film
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            if (!boundaries[idx(r, c)]) continue;
            bool near_film = false;
            for (int dr = -1; dr <= 1 && !near_film; ++dr)
                for (int dc = -1; dc <= 1 && !near_film; ++dc) {
                    int rr = r + dr, cc = c + dc;
                    if (rr >= 0 && rr < height && cc >= 0 && cc < width &&
                        film[idx(rr, cc)])
                        near_film = true;
                }
            require(near_film, ErrorCode::validation,
                    "boundary pixel outside dilation of film");
        }
    }
    for (size_t i = 0; i < n; ++i)
        require(!defects[i] || film[i], ErrorCode::validation,
                "defect pixel outside film");
}

namespace {

struct Point {
    double x, y; // um
};

// Dart-throwing Poisson-disk sampling; stops at the target count or when the
// attempt budget is exhausted.
std::vector<Point> poisson_disk(int target, double extent, double min_dist, Rng& rng) {
    std::vector<Point> pts;
    if (target <= 0) return pts;
    pts.reserve(target);
    int attempts = 64 * target;
    double d2 = min_dist * min_dist;
    while (static_cast<int>(pts.size()) < target && attempts-- > 0) {
        Point p{rng.uniform() * extent, rng.uniform() * extent};
        bool ok = true;
        for (const Point& q : pts) {
            double dx = p.x - q.x, dy = p.y - q.y;
            if (dx * dx + dy * dy < d2) { ok = false; break; }
        }
        if (ok) pts.push_back(p);
    }
    return pts;
}

void draw_segment(std::vector<uint8_t>& mask, int n, double x0, double y0,
                  double x1, double y1) {
    // Bresenham on rounded endpoints, 1 pixel wide
    int r0 = static_cast<int>(std::lround(y0)), c0 = static_cast<int>(std::lround(x0));
    int r1 = static_cast<int>(std::lround(y1)), c1 = static_cast<int>(std::lround(x1));
    int dr = std::abs(r1 - r0), dc = std::abs(c1 - c0);
    int sr = r0 < r1 ? 1 : -1, sc = c0 < c1 ? 1 : -1;
    int err = (dc > dr ? dc : -dr) / 2;
    int r = r0, c = c0;
    while (true) {
        if (r >= 0 && r < n && c >= 0 && c < n)
            mask[static_cast<size_t>(r) * n + c] = 1;
        if (r == r1 && c == c1) break;
        int e2 = err;
        if (e2 > -dr) { err -= dc; r += sr; }
        if (e2 < dc) { err += dr; c += sc; }
    }
}

} // namespace

std::pair<ScanPair, GroundTruthMask> generate_sample(const SampleSpec& spec) {
    spec.validate();
    int n = spec.grid_size;
    size_t total = static_cast<size_t>(n) * n;
    double area = spec.extent_um * spec.extent_um;
    double pitch = spec.extent_um / n;

    require(spec.nucleation_density > 0.0, ErrorCode::generation,
            "coverage target unreachable: nucleation_density is zero");
    int n_seeds = std::max<int>(1, static_cast<int>(std::llround(
                                       spec.nucleation_density * area)));
    Rng seed_rng(mix_seed({spec.rng_seed, 0xA1}));
    double min_dist = 0.7 / std::sqrt(spec.nucleation_density);
    std::vector<Point> seeds = poisson_disk(n_seeds, spec.extent_um, min_dist, seed_rng);
    require(!seeds.empty(), ErrorCode::generation, "no nucleation sites placed");

    // distance to nearest and second-nearest nucleation site, per pixel
    std::vector<float> d1(total), d2(total);
    for (int r = 0; r < n; ++r) {
        double y = (r + 0.5) * pitch;
        for (int c = 0; c < n; ++c) {
            double x = (c + 0.5) * pitch;
            double best = std::numeric_limits<double>::infinity(), second = best;
            for (const Point& s : seeds) {
                double dx = x - s.x, dy = y - s.y;
                double d = dx * dx + dy * dy;
                if (d < best) { second = best; best = d; }
                else if (d < second) { second = d; }
            }
            size_t i = static_cast<size_t>(r) * n + c;
            d1[i] = static_cast<float>(std::sqrt(best));
            d2[i] = static_cast<float>(std::sqrt(second));
        }
    }

    // carve cracks first so the growth radius can compensate for lost pixels
    std::vector<uint8_t> crack_px(total, 0);
    Rng crack_rng(mix_seed({spec.rng_seed, 0xC2}));
    for (int k = 0; k < spec.crack_count; ++k) {
        double x = crack_rng.uniform() * n;
        double y = crack_rng.uniform() * n;
        double angle = crack_rng.uniform() * 6.283185307179586;
        int segs = 2 + static_cast<int>(crack_rng.uniform_int(3));
        for (int s = 0; s < segs; ++s) {
            double len = crack_rng.uniform(0.15, 0.35) * n;
            double x1 = x + len * std::cos(angle);
            double y1 = y + len * std::sin(angle);
            draw_segment(crack_px, n, x, y, x1, y1);
            x = x1; y = y1;
            angle += (crack_rng.uniform() < 0.5 ? -1.0 : 1.0) *
                     crack_rng.uniform(0.17, 0.61); // 10..35 degrees
        }
    }

    // growth radius = coverage quantile of d1 over pixels not lost to cracks
    size_t k_target = static_cast<size_t>(std::llround(spec.coverage_target *
                                                       static_cast<double>(total)));
    std::vector<float> eligible;
    eligible.reserve(total);
    for (size_t i = 0; i < total; ++i)
        if (!crack_px[i]) eligible.push_back(d1[i]);
    require(eligible.size() + static_cast<size_t>(0.02 * total) >= k_target,
            ErrorCode::generation,
            "coverage target unreachable: cracks remove too much area");

    float growth_radius;
    if (k_target == 0) {
        growth_radius = -1.0f;
    } else if (k_target >= eligible.size()) {
        growth_radius = std::numeric_limits<float>::infinity();
    } else {
        std::nth_element(eligible.begin(), eligible.begin() + (k_target - 1),
                         eligible.end());
        growth_radius = eligible[k_target - 1];
    }

    GroundTruthMask mask;
    mask.height = n;
    mask.width = n;
    mask.film.assign(total, 0);
    mask.boundaries.assign(total, 0);
    mask.defects.assign(total, 0);
    mask.cracks.assign(total, 0);

    float ridge_band = static_cast<float>(pitch);
    for (size_t i = 0; i < total; ++i) {
        bool grown = d1[i] <= growth_radius;
        mask.film[i] = grown && !crack_px[i];
        mask.cracks[i] = crack_px[i] && grown;
        mask.boundaries[i] =
            mask.film[i] && d2[i] <= growth_radius && (d2[i] - d1[i]) <= ridge_band;
    }

    // point defects: isolated sites well inside clean film
    Rng defect_rng(mix_seed({spec.rng_seed, 0xD3}));
    int defect_target = static_cast<int>(std::llround(spec.defect_density * area));
    std::vector<std::pair<int, int>> defect_sites;
    int attempts = 300 * std::max(1, defect_target);
    while (static_cast<int>(defect_sites.size()) < defect_target && attempts-- > 0) {
        int r = 2 + static_cast<int>(defect_rng.uniform_int(n - 4));
        int c = 2 + static_cast<int>(defect_rng.uniform_int(n - 4));
        bool ok = true;
        for (int dr = -2; dr <= 2 && ok; ++dr)
            for (int dc = -2; dc <= 2 && ok; ++dc) {
                size_t i = mask.idx(r + dr, c + dc);
                if (!mask.film[i] || mask.boundaries[i] || mask.cracks[i]) ok = false;
            }
        if (!ok) continue;
        for (auto [pr, pc] : defect_sites) {
            int dr = pr - r, dc = pc - c;
            if (dr * dr + dc * dc < 36) { ok = false; break; }
        }
        if (!ok) continue;
        defect_sites.emplace_back(r, c);
        mask.defects[mask.idx(r, c)] = 1;
    }

    // morphology: monolayer step height on film, broadened by the tip
    ScanField morph = ScanField::make(n, n, Channel::morphology);
    morph.extent_w_um = spec.extent_um;
    morph.extent_h_um = spec.extent_um;
    for (size_t i = 0; i < total; ++i)
        morph.data[i] = mask.film[i] ? static_cast<float>(spec.monolayer_height_nm) : 0.0f;
    morph = tip_convolve(morph, spec.tip_radius_px);
    morph = add_noise(morph, spec.noise_sigma, mix_seed({spec.rng_seed, 0xE4}));

    // current: on-level on clean film; grain boundaries, cracks and defect
    // neighbourhoods conduct at the off level
    ScanField curr = ScanField::make(n, n, Channel::current);
    curr.extent_w_um = spec.extent_um;
    curr.extent_h_um = spec.extent_um;
    float on = static_cast<float>(spec.on_current_nA);
    float off = static_cast<float>(spec.off_current_nA);
    for (size_t i = 0; i < total; ++i)
        curr.data[i] = (mask.film[i] && !mask.boundaries[i]) ? on : off;
    for (auto [r, c] : defect_sites)
        for (int dr = -1; dr <= 1; ++dr)
            for (int dc = -1; dc <= 1; ++dc)
                curr.data[mask.idx(r + dr, c + dc)] = off;
    curr = add_noise(curr, spec.noise_sigma, mix_seed({spec.rng_seed, 0xF5}));

    ScanPair pair;
    pair.sample_id = "synth-" + std::to_string(spec.rng_seed);
    pair.morphology = std::move(morph);
    pair.current = std::move(curr);
    pair.morphology.sample_id = pair.sample_id;
    pair.current.sample_id = pair.sample_id;
    pair.validate();
    mask.validate();
    return {std::move(pair), std::move(mask)};
}

ScanField tip_convolve(const ScanField& field, int tip_radius_px) {
    field.validate();
    require(tip_radius_px >= 0, ErrorCode::validation, "tip radius must be >= 0");
    if (tip_radius_px == 0) return field;

    std::vector<std::pair<int, int>> disk;
    for (int dr = -tip_radius_px; dr <= tip_radius_px; ++dr)
        for (int dc = -tip_radius_px; dc <= tip_radius_px; ++dc)
            if (dr * dr + dc * dc <= tip_radius_px * tip_radius_px)
                disk.emplace_back(dr, dc);

    ScanField out = field;
    for (int r = 0; r < field.height; ++r) {
        for (int c = 0; c < field.width; ++c) {
            float best = field.at(r, c);
            for (auto [dr, dc] : disk) {
                int rr = r + dr, cc = c + dc;
                if (rr < 0 || rr >= field.height || cc < 0 || cc >= field.width) continue;
                best = std::max(best, field.at(rr, cc));
            }
            out.at(r, c) = best;
        }
    }
    return out;
}

ScanField add_noise(const ScanField& field, double sigma_rel, uint64_t rng_seed) {
    field.validate();
    require(sigma_rel >= 0.0, ErrorCode::validation, "noise sigma must be >= 0");
    if (sigma_rel == 0.0) return field;

    auto [mn, mx] = std::minmax_element(field.data.begin(), field.data.end());
    double std_dev = sigma_rel * (static_cast<double>(*mx) - static_cast<double>(*mn));
    if (std_dev == 0.0) return field;

    ScanField out = field;
    Rng rng(rng_seed);
    for (float& v : out.data)
        v = static_cast<float>(v + std_dev * rng.normal());
    return out;
}

void write_mask(const GroundTruthMask& mask, const std::string& path) {
    mask.validate();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorCode::io, "cannot open for writing: " + path);
    auto put_u32 = [&](uint32_t v) {
        uint8_t b[4] = {static_cast<uint8_t>(v & 0xff), static_cast<uint8_t>(v >> 8 & 0xff),
                        static_cast<uint8_t>(v >> 16 & 0xff), static_cast<uint8_t>(v >> 24)};
        out.write(reinterpret_cast<const char*>(b), 4);
    };
    out.write("SCMK", 4);
    put_u32(1);
    put_u32(static_cast<uint32_t>(mask.height));
    put_u32(static_cast<uint32_t>(mask.width));
    for (const auto* plane : {&mask.film, &mask.boundaries, &mask.defects, &mask.cracks})
        out.write(reinterpret_cast<const char*>(plane->data()),
                  static_cast<std::streamsize>(plane->size()));
    require(out.good(), ErrorCode::io, "write failed: " + path);
}

GroundTruthMask read_mask(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCode::io, "cannot open for reading: " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    require(bytes.size() >= 16, ErrorCode::corruption, "truncated mask file");
    require(std::memcmp(bytes.data(), "SCMK", 4) == 0, ErrorCode::format,
            "bad magic: not a SCMK file");
    auto get_u32 = [&](size_t off) {
        return static_cast<uint32_t>(bytes[off]) | (static_cast<uint32_t>(bytes[off + 1]) << 8) |
               (static_cast<uint32_t>(bytes[off + 2]) << 16) |
               (static_cast<uint32_t>(bytes[off + 3]) << 24);
    };
    require(get_u32(4) == 1, ErrorCode::format, "unsupported SCMK version");
    GroundTruthMask mask;
    mask.height = static_cast<int>(get_u32(8));
    mask.width = static_cast<int>(get_u32(12));
    size_t total = static_cast<size_t>(mask.height) * mask.width;
    require(bytes.size() >= 16 + 4 * total, ErrorCode::corruption,
            "truncated mask payload");
    auto read_plane = [&](std::vector<uint8_t>& plane, size_t off) {
        plane.assign(bytes.begin() + static_cast<long>(off),
                     bytes.begin() + static_cast<long>(off + total));
    };
    read_plane(mask.film, 16);
    read_plane(mask.boundaries, 16 + total);
    read_plane(mask.defects, 16 + 2 * total);
    read_plane(mask.cracks, 16 + 3 * total);
    mask.validate();
    return mask;
}

} // namespace scafm
