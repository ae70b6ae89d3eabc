#pragma once

#include <array>
#include <string>
#include <vector>

#include "advtrans/data/png_io.hpp"
#include "advtrans/data/types.hpp"

namespace advtrans {

/// The attributes the procedural renderer can toggle.
inline const std::vector<std::string>& renderable_domains() {
    static const std::vector<std::string> names{"blond_hair", "makeup", "eyeglasses"};
    return names;
}

struct DomainBits {
    bool blond_hair = false;
    bool makeup = false;
    bool eyeglasses = false;
};

/// Identity-determined facial geometry, all lengths as fractions of the
/// image side.
struct FaceGeometry {
    double face_rx, face_ry;
    double eye_dx, eye_y, eye_r;
    double mouth_y, mouth_w, mouth_h;
    double skin_r, skin_g, skin_b;
};

/// Per-image nuisance variation.
struct NuisanceDraw {
    double dx, dy;    // center shift in output pixels
    double light;     // multiplicative lighting
    double bg;        // background gray level
};

struct PixelBox {
    int x0, y0, x1, y1;  // half-open

    bool contains(int x, int y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
};

/// Pixel-space regions of the rendered face, for probes and locality checks.
struct FaceLayout {
    int cx, cy;  // face center in pixels
    PixelBox hair_probe;       // interior band of the hair cap
    PixelBox lip_region;
    PixelBox eyeglass_region;  // covers every pixel eyeglasses may touch
};

FaceGeometry identity_geometry(std::uint64_t seed, int identity);
NuisanceDraw nuisance_draw(std::uint64_t seed, int identity, int index);
FaceLayout face_layout(const FaceGeometry& g, const NuisanceDraw& n, int size);

/// Renders one face deterministically. Pixels outside the eyeglass region
/// are unaffected by the eyeglasses bit (and similarly localized for the
/// other toggles), which the tests exploit.
ImageU8 render_face(const FaceGeometry& g, const NuisanceDraw& n, const DomainBits& bits, int size);

/// Procedural desk-scale dataset. Bit-identical output for identical
/// (arguments, seed). Domain bits are sampled per image; per-identity split
/// is a seeded shuffle taking the first `train_per_identity` into train.
DatasetSplit generate_synthetic_dataset(int identity_count, int images_per_identity, int image_size,
                                        const std::vector<std::string>& domain_names, std::uint64_t seed,
                                        int train_per_identity = kTrainImagesPerIdentity);

}  // namespace advtrans
