#include "advtrans/data/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "advtrans/core/rng.hpp"

namespace advtrans {

namespace {

constexpr int kSupersample = 2;

struct Canvas {
    int size;  // supersampled side
    std::vector<double> rgb;

    explicit Canvas(int s) : size(s), rgb(static_cast<size_t>(s) * s * 3) {}

    void set(int x, int y, double r, double g, double b) {
        if (x < 0 || y < 0 || x >= size || y >= size) return;
        double* p = rgb.data() + (static_cast<size_t>(y) * size + x) * 3;
        p[0] = r;
        p[1] = g;
        p[2] = b;
    }

    void fill_ellipse(double cx, double cy, double rx, double ry, double r, double g, double b) {
        const int y0 = std::max(0, static_cast<int>(std::floor(cy - ry)));
        const int y1 = std::min(size - 1, static_cast<int>(std::ceil(cy + ry)));
        const int x0 = std::max(0, static_cast<int>(std::floor(cx - rx)));
        const int x1 = std::min(size - 1, static_cast<int>(std::ceil(cx + rx)));
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                const double u = (x + 0.5 - cx) / rx;
                const double v = (y + 0.5 - cy) / ry;
                if (u * u + v * v <= 1.0) set(x, y, r, g, b);
            }
    }

    /// Upper cap of an ellipse: inside the ellipse and strictly above y_cut.
    void fill_ellipse_cap(double cx, double cy, double rx, double ry, double y_cut, double r, double g, double b) {
        const int y0 = std::max(0, static_cast<int>(std::floor(cy - ry)));
        const int y1 = std::min(size - 1, static_cast<int>(std::ceil(y_cut)));
        const int x0 = std::max(0, static_cast<int>(std::floor(cx - rx)));
        const int x1 = std::min(size - 1, static_cast<int>(std::ceil(cx + rx)));
        for (int y = y0; y <= y1; ++y) {
            if (y + 0.5 >= y_cut) continue;
            for (int x = x0; x <= x1; ++x) {
                const double u = (x + 0.5 - cx) / rx;
                const double v = (y + 0.5 - cy) / ry;
                if (u * u + v * v <= 1.0) set(x, y, r, g, b);
            }
        }
    }

    void fill_rect(double x0, double y0, double x1, double y1, double r, double g, double b) {
        const int ix0 = std::max(0, static_cast<int>(std::floor(x0)));
        const int iy0 = std::max(0, static_cast<int>(std::floor(y0)));
        const int ix1 = std::min(size - 1, static_cast<int>(std::ceil(x1)) - 1);
        const int iy1 = std::min(size - 1, static_cast<int>(std::ceil(y1)) - 1);
        for (int y = iy0; y <= iy1; ++y)
            for (int x = ix0; x <= ix1; ++x) set(x, y, r, g, b);
    }

    /// Rectangular ring (frame) of the given thickness.
    void frame_rect(double x0, double y0, double x1, double y1, double t, double r, double g, double b) {
        fill_rect(x0, y0, x1, y0 + t, r, g, b);
        fill_rect(x0, y1 - t, x1, y1, r, g, b);
        fill_rect(x0, y0, x0 + t, y1, r, g, b);
        fill_rect(x1 - t, y0, x1, y1, r, g, b);
    }
};

ImageU8 downsample_quantize(const Canvas& c, int out_size) {
    ImageU8 img;
    img.width = img.height = out_size;
    img.rgb.resize(static_cast<size_t>(out_size) * out_size * 3);
    const int f = kSupersample;
    for (int y = 0; y < out_size; ++y)
        for (int x = 0; x < out_size; ++x)
            for (int ch = 0; ch < 3; ++ch) {
                double acc = 0;
                for (int dy = 0; dy < f; ++dy)
                    for (int dx = 0; dx < f; ++dx)
                        acc += c.rgb[(static_cast<size_t>(y * f + dy) * c.size + (x * f + dx)) * 3 + ch];
                double v = acc / (f * f) * 255.0;
                if (v < 0) v = 0;
                if (v > 255) v = 255;
                img.at(y, x, ch) = static_cast<std::uint8_t>(std::nearbyint(v));
            }
    return img;
}

struct Colors {
    static constexpr double hair_black[3] = {0.07, 0.06, 0.05};
    static constexpr double hair_blond[3] = {0.83, 0.68, 0.28};
    static constexpr double lips_plain[3] = {0.50, 0.33, 0.30};
    static constexpr double lips_makeup[3] = {0.85, 0.08, 0.12};
    static constexpr double cheek_makeup[3] = {0.95, 0.52, 0.58};
    static constexpr double eye_white[3] = {0.93, 0.93, 0.90};
    static constexpr double pupil[3] = {0.12, 0.10, 0.09};
    static constexpr double glasses[3] = {0.08, 0.08, 0.10};
};

}  // namespace

FaceGeometry identity_geometry(std::uint64_t seed, int identity) {
    Rng rng(derive_seed(seed, "identity-geometry", static_cast<std::uint64_t>(identity)));
    FaceGeometry g;
    g.face_rx = rng.uniform(0.30, 0.37);
    g.face_ry = rng.uniform(0.37, 0.44);
    g.eye_dx = rng.uniform(0.10, 0.16);
    g.eye_y = rng.uniform(-0.075, -0.025);
    g.eye_r = rng.uniform(0.035, 0.055);
    g.mouth_y = rng.uniform(0.17, 0.25);
    g.mouth_w = rng.uniform(0.09, 0.15);
    g.mouth_h = rng.uniform(0.028, 0.05);
    g.skin_r = rng.uniform(0.55, 0.82);
    g.skin_g = g.skin_r * rng.uniform(0.72, 0.84);
    g.skin_b = g.skin_r * rng.uniform(0.52, 0.66);
    return g;
}

NuisanceDraw nuisance_draw(std::uint64_t seed, int identity, int index) {
    Rng rng(derive_seed(seed, "nuisance", static_cast<std::uint64_t>(identity) * 1000003ULL +
                                             static_cast<std::uint64_t>(index)));
    NuisanceDraw n;
    n.dx = rng.uniform(-1.5, 1.5);
    n.dy = rng.uniform(-1.5, 1.5);
    n.light = rng.uniform(0.90, 1.10);
    n.bg = rng.uniform(0.12, 0.32);
    return n;
}

FaceLayout face_layout(const FaceGeometry& g, const NuisanceDraw& n, int size) {
    FaceLayout l;
    const double s = size;
    l.cx = static_cast<int>(std::lround(s / 2 + n.dx));
    l.cy = static_cast<int>(std::lround(s / 2 + n.dy));

    const double brow_y = l.cy + (g.eye_y - 0.10) * s;
    l.hair_probe = {static_cast<int>(l.cx - 0.45 * g.face_rx * s), static_cast<int>(l.cy - 0.95 * g.face_ry * s),
                    static_cast<int>(l.cx + 0.45 * g.face_rx * s), static_cast<int>(brow_y - 0.05 * s)};

    const double lip_cy = l.cy + g.mouth_y * s;
    l.lip_region = {static_cast<int>(std::floor(l.cx - g.mouth_w * s)), static_cast<int>(std::floor(lip_cy - g.mouth_h * s)),
                    static_cast<int>(std::ceil(l.cx + g.mouth_w * s)) + 1,
                    static_cast<int>(std::ceil(lip_cy + g.mouth_h * s)) + 1};

    const double eye_cy = l.cy + g.eye_y * s;
    const double half_w = g.eye_r * s * 2.05;
    const double half_h = g.eye_r * s * 1.4;
    l.eyeglass_region = {static_cast<int>(std::floor(l.cx - g.eye_dx * s - half_w)) - 1,
                         static_cast<int>(std::floor(eye_cy - half_h)) - 1,
                         static_cast<int>(std::ceil(l.cx + g.eye_dx * s + half_w)) + 1,
                         static_cast<int>(std::ceil(eye_cy + half_h)) + 1};
    return l;
}

ImageU8 render_face(const FaceGeometry& g, const NuisanceDraw& n, const DomainBits& bits, int size) {
    const int f = kSupersample;
    Canvas c(size * f);
    const double s = static_cast<double>(size) * f;
    const double cx = s / 2 + n.dx * f;
    const double cy = s / 2 + n.dy * f;
    const double light = n.light;
    auto lit = [light](const double col[3], int i) { return std::min(1.0, col[i] * light); };

    // background
    for (size_t i = 0; i < c.rgb.size(); ++i) c.rgb[i] = n.bg;

    // face
    c.fill_ellipse(cx, cy, g.face_rx * s, g.face_ry * s, std::min(1.0, g.skin_r * light),
                   std::min(1.0, g.skin_g * light), std::min(1.0, g.skin_b * light));

    // hair cap down to the brow line
    const double brow_y = cy + (g.eye_y - 0.10) * s;
    const double* hair = bits.blond_hair ? Colors::hair_blond : Colors::hair_black;
    c.fill_ellipse_cap(cx, cy - 0.03 * s, g.face_rx * 1.22 * s, g.face_ry * 1.16 * s, brow_y, lit(hair, 0),
                       lit(hair, 1), lit(hair, 2));

    // cheeks under makeup
    if (bits.makeup) {
        const double ch_y = cy + 0.08 * s;
        const double ch_r = 0.045 * s;
        c.fill_ellipse(cx - g.eye_dx * 1.25 * s, ch_y, ch_r, ch_r, lit(Colors::cheek_makeup, 0),
                       lit(Colors::cheek_makeup, 1), lit(Colors::cheek_makeup, 2));
        c.fill_ellipse(cx + g.eye_dx * 1.25 * s, ch_y, ch_r, ch_r, lit(Colors::cheek_makeup, 0),
                       lit(Colors::cheek_makeup, 1), lit(Colors::cheek_makeup, 2));
    }

    // eyes
    const double eye_cy = cy + g.eye_y * s;
    for (const double ex : {cx - g.eye_dx * s, cx + g.eye_dx * s}) {
        c.fill_ellipse(ex, eye_cy, g.eye_r * 1.35 * s, g.eye_r * s, lit(Colors::eye_white, 0),
                       lit(Colors::eye_white, 1), lit(Colors::eye_white, 2));
        c.fill_ellipse(ex, eye_cy, g.eye_r * 0.45 * s, g.eye_r * 0.45 * s, lit(Colors::pupil, 0),
                       lit(Colors::pupil, 1), lit(Colors::pupil, 2));
    }

    // mouth
    const double* lips = bits.makeup ? Colors::lips_makeup : Colors::lips_plain;
    c.fill_ellipse(cx, cy + g.mouth_y * s, g.mouth_w * s, g.mouth_h * s, lit(lips, 0), lit(lips, 1), lit(lips, 2));

    // eyeglasses: frames plus bridge, confined to the eyeglass region
    if (bits.eyeglasses) {
        const double t = std::max(1.0, 0.016 * s);
        const double half_w = g.eye_r * s * 2.0;
        const double half_h = g.eye_r * s * 1.35;
        for (const double ex : {cx - g.eye_dx * s, cx + g.eye_dx * s})
            c.frame_rect(ex - half_w, eye_cy - half_h, ex + half_w, eye_cy + half_h, t, lit(Colors::glasses, 0),
                         lit(Colors::glasses, 1), lit(Colors::glasses, 2));
        c.fill_rect(cx - g.eye_dx * s + half_w, eye_cy - t / 2, cx + g.eye_dx * s - half_w, eye_cy + t / 2,
                    lit(Colors::glasses, 0), lit(Colors::glasses, 1), lit(Colors::glasses, 2));
    }

    return downsample_quantize(c, size);
}

DatasetSplit generate_synthetic_dataset(int identity_count, int images_per_identity, int image_size,
                                        const std::vector<std::string>& domain_names, std::uint64_t seed,
                                        int train_per_identity) {
    if (identity_count < 2) throw ContractError("generate_synthetic_dataset: identity_count must be >= 2");
    if (images_per_identity < train_per_identity + 1)
        throw ContractError("generate_synthetic_dataset: images_per_identity must exceed the train count " +
                            std::to_string(train_per_identity));
    for (const auto& name : domain_names) {
        const auto& ok = renderable_domains();
        if (std::find(ok.begin(), ok.end(), name) == ok.end()) {
            std::string valid;
            for (const auto& v : ok) valid += (valid.empty() ? "" : ", ") + v;
            throw ContractError("unsupported domain '" + name + "'; renderable set: {" + valid + "}");
        }
    }

    DatasetSplit split;
    split.identity_count = identity_count;
    split.domain_names = domain_names;
    split.image_size = image_size;
    split.seed = seed;

    for (int k = 0; k < identity_count; ++k) {
        const FaceGeometry geo = identity_geometry(seed, k);
        std::vector<LabeledFaceInstance> all;
        for (int i = 0; i < images_per_identity; ++i) {
            Rng brng(derive_seed(seed, "domain-bits",
                                 static_cast<std::uint64_t>(k) * 1000003ULL + static_cast<std::uint64_t>(i)));
            DomainBits bits;
            std::vector<std::uint8_t> bitvec;
            for (const auto& name : domain_names) {
                const bool on = brng.uniform() < 0.5;
                bitvec.push_back(on ? 1 : 0);
                if (name == "blond_hair") bits.blond_hair = on;
                if (name == "makeup") bits.makeup = on;
                if (name == "eyeglasses") bits.eyeglasses = on;
            }
            const NuisanceDraw nd = nuisance_draw(seed, k, i);
            LabeledFaceInstance inst;
            inst.image = decode_image(render_face(geo, nd, bits, image_size));
            inst.identity = k;
            inst.domains = std::move(bitvec);
            inst.source = "synth/" + std::to_string(k) + "/" + std::to_string(i);
            all.push_back(std::move(inst));
        }
        Rng srng(derive_seed(seed, "split", static_cast<std::uint64_t>(k)));
        const std::vector<int> perm = srng.permutation(images_per_identity);
        for (int i = 0; i < images_per_identity; ++i) {
            auto& dst = i < train_per_identity ? split.train : split.test;
            dst.push_back(std::move(all[static_cast<size_t>(perm[static_cast<size_t>(i)])]));
        }
    }
    split.validate(train_per_identity);
    return split;
}

}  // namespace advtrans
