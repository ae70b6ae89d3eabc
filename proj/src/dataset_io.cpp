#include "advtrans/data/dataset_io.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "advtrans/core/rng.hpp"
#include "advtrans/data/png_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace advtrans {

namespace {
std::string bits_string(const std::vector<std::uint8_t>& bits) {
    std::string s;
    for (const auto b : bits) s += (b ? '1' : '0');
    return s;
}

json instance_list(const std::vector<LabeledFaceInstance>& v) {
    json arr = json::array();
    for (size_t i = 0; i < v.size(); ++i)
        arr.push_back({{"file", std::to_string(i) + "_" + std::to_string(v[i].identity) + "_" +
                                    bits_string(v[i].domains) + ".png"},
                       {"identity", v[i].identity},
                       {"domains", v[i].domains},
                       {"source", v[i].source}});
    return arr;
}
}  // namespace

int export_images(const std::vector<LabeledFaceInstance>& instances, const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory: " + dir);
    int count = 0;
    for (size_t i = 0; i < instances.size(); ++i) {
        const auto& inst = instances[i];
        const std::string name =
            std::to_string(i) + "_" + std::to_string(inst.identity) + "_" + bits_string(inst.domains) + ".png";
        write_png((fs::path(dir) / name).string(), encode_image(inst.image));
        ++count;
    }
    return count;
}

void save_dataset(const DatasetSplit& split, const std::string& dir) {
    export_images(split.train, (fs::path(dir) / "train").string());
    export_images(split.test, (fs::path(dir) / "test").string());
    json manifest{{"identity_count", split.identity_count},
                  {"domain_names", split.domain_names},
                  {"image_size", split.image_size},
                  {"seed", split.seed},
                  {"train", instance_list(split.train)},
                  {"test", instance_list(split.test)}};
    std::ofstream out(fs::path(dir) / "manifest.json");
    if (!out) throw IoError("cannot write manifest under " + dir);
    out << manifest.dump(2) << "\n";
}

DatasetSplit load_dataset(const std::string& dir) {
    std::ifstream in(fs::path(dir) / "manifest.json");
    if (!in) throw IoError("missing dataset manifest: " + (fs::path(dir) / "manifest.json").string());
    json manifest = json::parse(in);

    DatasetSplit split;
    split.identity_count = manifest.at("identity_count").get<int>();
    split.domain_names = manifest.at("domain_names").get<std::vector<std::string>>();
    split.image_size = manifest.at("image_size").get<int>();
    split.seed = manifest.at("seed").get<std::uint64_t>();
    for (const char* part : {"train", "test"}) {
        auto& dst = std::string(part) == "train" ? split.train : split.test;
        for (const auto& e : manifest.at(part)) {
            LabeledFaceInstance inst;
            const std::string file = (fs::path(dir) / part / e.at("file").get<std::string>()).string();
            inst.image = decode_image(read_png(file));
            inst.identity = e.at("identity").get<int>();
            inst.domains = e.at("domains").get<std::vector<std::uint8_t>>();
            inst.source = e.at("source").get<std::string>();
            dst.push_back(std::move(inst));
        }
    }
    return split;
}

DatasetSplit ingest_celeba_layout(const std::string& image_dir, const std::string& attr_file,
                                  const std::string& identity_file, const std::vector<int>& selected_identities,
                                  const std::vector<std::string>& selected_domains, int image_size,
                                  std::uint64_t seed, int train_per_identity) {
    std::ifstream attrs(attr_file);
    if (!attrs) throw IoError("missing attribute file: " + attr_file);
    std::ifstream ids(identity_file);
    if (!ids) throw IoError("missing identity file: " + identity_file);

    std::string line;
    std::getline(attrs, line);  // image count; the file list is authoritative
    std::getline(attrs, line);
    std::vector<std::string> attr_names;
    {
        std::istringstream ss(line);
        std::string name;
        while (ss >> name) attr_names.push_back(name);
    }
    std::vector<int> domain_cols;
    for (const auto& want : selected_domains) {
        const auto it = std::find(attr_names.begin(), attr_names.end(), want);
        if (it == attr_names.end()) {
            std::string valid;
            for (const auto& a : attr_names) valid += (valid.empty() ? "" : ", ") + a;
            throw ContractError("unknown domain name '" + want + "'; attribute file defines: {" + valid + "}");
        }
        domain_cols.push_back(static_cast<int>(it - attr_names.begin()));
    }

    std::map<std::string, std::vector<std::uint8_t>> file_bits;
    while (std::getline(attrs, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string fname;
        ss >> fname;
        std::vector<int> vals;
        int v;
        while (ss >> v) vals.push_back(v);
        std::vector<std::uint8_t> bits;
        for (const int col : domain_cols) {
            if (col >= static_cast<int>(vals.size()))
                throw IoError("attribute row for " + fname + " is shorter than the header");
            bits.push_back(vals[static_cast<size_t>(col)] > 0 ? 1 : 0);  // +1 -> 1, -1 -> 0
        }
        file_bits[fname] = std::move(bits);
    }

    std::map<int, std::vector<std::string>> identity_files;
    while (std::getline(ids, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string fname;
        int ident;
        ss >> fname >> ident;
        identity_files[ident].push_back(fname);
    }

    DatasetSplit split;
    split.identity_count = static_cast<int>(selected_identities.size());
    split.domain_names = selected_domains;
    split.image_size = image_size;
    split.seed = seed;

    for (size_t label = 0; label < selected_identities.size(); ++label) {
        const int ident = selected_identities[label];
        auto it = identity_files.find(ident);
        const int have = it == identity_files.end() ? 0 : static_cast<int>(it->second.size());
        if (have < train_per_identity + 1)
            throw ContractError("identity " + std::to_string(ident) + " has only " + std::to_string(have) +
                                " images; need at least " + std::to_string(train_per_identity + 1) +
                                " to satisfy the split");
        std::vector<std::string> files = it->second;
        std::sort(files.begin(), files.end());
        Rng srng(derive_seed(seed, "celeba-split", static_cast<std::uint64_t>(ident)));
        const std::vector<int> perm = srng.permutation(static_cast<int>(files.size()));

        for (size_t i = 0; i < files.size(); ++i) {
            const std::string& fname = files[static_cast<size_t>(perm[i])];
            const std::string path = (fs::path(image_dir) / fname).string();
            if (!fs::exists(path)) throw IoError("image listed but missing on disk: " + path);
            const auto bit_it = file_bits.find(fname);
            if (bit_it == file_bits.end()) throw IoError("no attribute row for image: " + fname);
            LabeledFaceInstance inst;
            inst.image = decode_image(resize_u8(read_png(path), image_size));
            inst.identity = static_cast<int>(label);
            inst.domains = bit_it->second;
            inst.source = fname;
            auto& dst = static_cast<int>(i) < train_per_identity ? split.train : split.test;
            dst.push_back(std::move(inst));
        }
    }
    split.validate(train_per_identity);
    return split;
}

}  // namespace advtrans
