#include "fedmlc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "bytes.hpp"
#include "fedmlc/rng.hpp"

namespace fedmlc {

// ------------------------------------------------------------- vocabulary

std::optional<std::size_t> LabelVocabulary::find(const std::string& code) const {
    const auto it = std::lower_bound(codes.begin(), codes.end(), code);
    if (it != codes.end() && *it == code) {
        return static_cast<std::size_t>(it - codes.begin());
    }
    return std::nullopt;
}

void LabelVocabulary::validate() const {
    for (std::size_t i = 1; i < codes.size(); ++i) {
        if (!(codes[i - 1] < codes[i])) {
            throw DataError("vocabulary must be sorted and duplicate-free; violation at \"" +
                            codes[i] + "\"");
        }
    }
}

void EmbeddingDataset::validate() const {
    vocab.validate();
    if (sample_ids.size() != x.rows || labels.size() != x.rows) {
        throw DataError("dataset: " + std::to_string(x.rows) + " rows but " +
                        std::to_string(sample_ids.size()) + " ids and " +
                        std::to_string(labels.size()) + " label lists");
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto& ls = labels[i];
        for (std::size_t k = 0; k < ls.size(); ++k) {
            if (ls[k] >= vocab.size()) {
                throw DataError("dataset: sample " + std::to_string(i) + " label id " +
                                std::to_string(ls[k]) + " outside vocabulary of " +
                                std::to_string(vocab.size()));
            }
            if (k > 0 && ls[k - 1] >= ls[k]) {
                throw DataError("dataset: sample " + std::to_string(i) +
                                " label ids not strictly increasing");
            }
        }
    }
}

// ------------------------------------------------------------------ codec

namespace {

constexpr char kDatasetMagic[4] = {'F', 'E', 'M', 'B'};
constexpr std::uint16_t kDatasetVersion = 1;

}  // namespace

std::vector<std::uint8_t> encode_dataset(const EmbeddingDataset& ds) {
    ds.validate();
    bytes::Writer w;
    w.raw(kDatasetMagic, 4);
    w.u16le(kDatasetVersion);
    w.u32le(static_cast<std::uint32_t>(ds.size()));
    w.u32le(static_cast<std::uint32_t>(ds.dim()));
    w.u32le(static_cast<std::uint32_t>(ds.vocab.size()));
    for (const std::string& code : ds.vocab.codes) w.str16(code);
    for (const std::string& id : ds.sample_ids) w.str16(id);
    for (double v : ds.x.data) w.f32le(static_cast<float>(v));
    for (const auto& ls : ds.labels) {
        w.u32le(static_cast<std::uint32_t>(ls.size()));
        for (std::uint32_t id : ls) w.u32le(id);
    }
    return w.buf;
}

EmbeddingDataset decode_dataset(const std::vector<std::uint8_t>& data) {
    try {
        bytes::Reader r(data.data(), data.size());
        r.need(4, "magic");
        char magic[4];
        for (char& ch : magic) ch = static_cast<char>(r.u8());
        if (std::memcmp(magic, kDatasetMagic, 4) != 0) {
            throw FormatError("dataset: bad magic", 0);
        }
        const std::uint16_t version = r.u16le();
        if (version != kDatasetVersion) {
            throw FormatError("dataset: unsupported version " + std::to_string(version), 4);
        }
        const std::uint32_t n = r.u32le();
        const std::uint32_t dim = r.u32le();
        const std::uint32_t vocab_size = r.u32le();
        // every string costs at least its 2-byte length prefix
        if (static_cast<std::size_t>(vocab_size) * 2 > r.remaining() ||
            static_cast<std::size_t>(n) * 2 > r.remaining()) {
            throw CorruptionError("dataset: declared counts exceed payload", r.offset());
        }
        EmbeddingDataset ds;
        ds.vocab.codes.reserve(vocab_size);
        for (std::uint32_t i = 0; i < vocab_size; ++i) ds.vocab.codes.push_back(r.str16());
        ds.sample_ids.reserve(n);
        for (std::uint32_t i = 0; i < n; ++i) ds.sample_ids.push_back(r.str16());
        if (static_cast<unsigned __int128>(n) * dim * 4 > r.remaining()) {
            throw CorruptionError("dataset: embedding block exceeds payload", r.offset());
        }
        ds.x = Matrix(n, dim);
        for (double& v : ds.x.data) v = static_cast<double>(r.f32le());
        ds.labels.resize(n);
        for (std::uint32_t i = 0; i < n; ++i) {
            const std::uint32_t count = r.u32le();
            if (count > vocab_size) {
                throw FormatError("dataset: sample " + std::to_string(i) + " declares " +
                                      std::to_string(count) + " labels but vocabulary has " +
                                      std::to_string(vocab_size),
                                  r.offset() - 4);
            }
            auto& ls = ds.labels[i];
            ls.resize(count);
            for (std::uint32_t k = 0; k < count; ++k) {
                ls[k] = r.u32le();
                if (ls[k] >= vocab_size) {
                    throw FormatError("dataset: label id " + std::to_string(ls[k]) +
                                          " outside vocabulary of " +
                                          std::to_string(vocab_size),
                                      r.offset() - 4);
                }
                if (k > 0 && ls[k - 1] >= ls[k]) {
                    throw FormatError("dataset: label ids not strictly increasing",
                                      r.offset() - 4);
                }
            }
        }
        if (r.remaining() != 0) {
            throw FormatError("dataset: " + std::to_string(r.remaining()) +
                                  " trailing bytes after payload",
                              r.offset());
        }
        try {
            ds.vocab.validate();
        } catch (const DataError& e) {
            throw FormatError(std::string("dataset: ") + e.what(), r.offset());
        }
        return ds;
    } catch (const CorruptionError& e) {
        // The store's error contract reports every structural defect,
        // truncation included, as a format error with the failing offset.
        throw FormatError("dataset: payload ends early", e.offset);
    }
}

void save_dataset(const EmbeddingDataset& ds, const std::string& path) {
    const std::vector<std::uint8_t> data = encode_dataset(ds);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open dataset file for writing: " + path);
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size()));
    if (!out) throw DataError("failed writing dataset file: " + path);
}

EmbeddingDataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open dataset file: " + path);
    std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
    if (data.size() >= 4 && std::memcmp(data.data(), kDatasetMagic, 4) == 0) {
        return decode_dataset(data);
    }
    return load_dataset_text(path);
}

EmbeddingDataset load_dataset_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset file: " + path);
    std::vector<std::string> ids;
    std::vector<std::vector<double>> rows;
    std::vector<std::vector<std::string>> code_lists;
    std::set<std::string> all_codes;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t tab = line.find('\t', start);
            fields.push_back(line.substr(start, tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (fields.size() != 3) {
            throw DataError("text dataset line " + std::to_string(line_no) + ": expected " +
                            "3 tab-separated fields, got " + std::to_string(fields.size()));
        }
        ids.push_back(fields[0]);
        std::vector<double> row;
        std::stringstream vs(fields[1]);
        std::string tok;
        while (std::getline(vs, tok, ',')) {
            try {
                row.push_back(static_cast<double>(static_cast<float>(std::stod(tok))));
            } catch (const std::exception&) {
                throw DataError("text dataset line " + std::to_string(line_no) +
                                ": bad value \"" + tok + "\"");
            }
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw DataError("text dataset line " + std::to_string(line_no) + ": dimension " +
                            std::to_string(row.size()) + " differs from first record's " +
                            std::to_string(rows.front().size()));
        }
        rows.push_back(std::move(row));
        std::vector<std::string> codes;
        if (!fields[2].empty()) {
            std::stringstream cs(fields[2]);
            while (std::getline(cs, tok, ';')) {
                if (!tok.empty()) codes.push_back(tok);
            }
        }
        for (const auto& c : codes) all_codes.insert(c);
        code_lists.push_back(std::move(codes));
    }
    if (rows.empty()) throw DataError("text dataset is empty: " + path);

    EmbeddingDataset ds;
    ds.vocab.codes.assign(all_codes.begin(), all_codes.end());
    ds.sample_ids = std::move(ids);
    ds.x = Matrix(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::copy(rows[i].begin(), rows[i].end(), ds.x.row(i));
    }
    ds.labels.resize(code_lists.size());
    for (std::size_t i = 0; i < code_lists.size(); ++i) {
        std::set<std::uint32_t> idset;
        for (const auto& c : code_lists[i]) {
            idset.insert(static_cast<std::uint32_t>(*ds.vocab.find(c)));
        }
        ds.labels[i].assign(idset.begin(), idset.end());
    }
    ds.validate();
    return ds;
}

// --------------------------------------------------------- standardization

StandardizerParams fit_standardizer(const Matrix& x_train) {
    if (x_train.rows < 2) {
        throw DataError("fit_standardizer: need at least 2 rows, got " +
                        std::to_string(x_train.rows));
    }
    const std::size_t d = x_train.cols;
    StandardizerParams p;
    p.mean.assign(d, 0.0);
    p.std_dev.assign(d, 0.0);
    const double inv_n = 1.0 / static_cast<double>(x_train.rows);
    for (std::size_t j = 0; j < d; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < x_train.rows; ++i) s += x_train.at(i, j);
        const double mu = s * inv_n;
        double acc = 0.0;
        for (std::size_t i = 0; i < x_train.rows; ++i) {
            const double dv = x_train.at(i, j) - mu;
            acc += dv * dv;
        }
        p.mean[j] = mu;
        p.std_dev[j] = std::max(std::sqrt(acc * inv_n), 1e-8);
    }
    return p;
}

Matrix apply_standardizer(const Matrix& x, const StandardizerParams& params) {
    if (x.cols != params.mean.size()) {
        throw DimensionError("apply_standardizer: " + std::to_string(x.cols) +
                             " columns vs " + std::to_string(params.mean.size()) +
                             " fitted features");
    }
    Matrix out(x.rows, x.cols);
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t j = 0; j < x.cols; ++j) {
            out.at(i, j) = (x.at(i, j) - params.mean[j]) / params.std_dev[j];
        }
    }
    return out;
}

// ------------------------------------------------------------- vocabulary

LabelVocabulary build_vocabulary(const EmbeddingDataset& ds,
                                 const std::vector<std::size_t>& train_indices) {
    std::set<std::string> codes;
    for (std::size_t i : train_indices) {
        for (std::uint32_t id : ds.labels[i]) codes.insert(ds.vocab.codes[id]);
    }
    LabelVocabulary v;
    v.codes.assign(codes.begin(), codes.end());
    return v;
}

BinarizeResult binarize_rows(const EmbeddingDataset& ds,
                             const std::vector<std::size_t>& indices,
                             const LabelVocabulary& vocab) {
    BinarizeResult r;
    r.y = Matrix(indices.size(), vocab.size());
    for (std::size_t row = 0; row < indices.size(); ++row) {
        for (std::uint32_t id : ds.labels[indices[row]]) {
            const auto pos = vocab.find(ds.vocab.codes[id]);
            if (pos.has_value()) {
                r.y.at(row, *pos) = 1.0;
            } else {
                ++r.unknown_count;
            }
        }
    }
    return r;
}

// ---------------------------------------------------------------- filters

std::vector<std::size_t> label_support(const EmbeddingDataset& ds) {
    std::vector<std::size_t> support(ds.vocab.size(), 0);
    for (const auto& ls : ds.labels) {
        for (std::uint32_t id : ls) ++support[id];
    }
    return support;
}

EmbeddingDataset filter_rare_labels(const EmbeddingDataset& ds, std::size_t min_count) {
    const std::vector<std::size_t> support = label_support(ds);
    std::vector<std::int64_t> remap(ds.vocab.size(), -1);
    LabelVocabulary new_vocab;
    for (std::size_t id = 0; id < ds.vocab.size(); ++id) {
        if (support[id] >= min_count) {
            remap[id] = static_cast<std::int64_t>(new_vocab.codes.size());
            new_vocab.codes.push_back(ds.vocab.codes[id]);
        }
    }
    std::vector<std::size_t> keep_rows;
    std::vector<std::vector<std::uint32_t>> new_labels;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        std::vector<std::uint32_t> ls;
        for (std::uint32_t id : ds.labels[i]) {
            if (remap[id] >= 0) ls.push_back(static_cast<std::uint32_t>(remap[id]));
        }
        if (!ls.empty()) {
            keep_rows.push_back(i);
            new_labels.push_back(std::move(ls));
        }
    }
    if (keep_rows.empty()) {
        throw DataError("filter_rare_labels: no samples survive min_count=" +
                        std::to_string(min_count));
    }
    EmbeddingDataset out;
    out.vocab = std::move(new_vocab);
    out.labels = std::move(new_labels);
    out.x = gather_rows(ds.x, keep_rows);
    out.sample_ids.reserve(keep_rows.size());
    for (std::size_t i : keep_rows) out.sample_ids.push_back(ds.sample_ids[i]);
    return out;
}

// ------------------------------------------------------------------ splits

// Three phases. First the classical greedy: walk labels rarest-first and send
// each sample to the split with the largest remaining per-label quota, ties
// broken by the larger remaining split budget, then by the seeded rng. The
// greedy keeps per-label proportions tight but lets split sizes drift by a few
// samples, so a repair phase moves least-damaging samples from over-full to
// under-full splits until the sizes match the ratios exactly, and a final
// swap-polish phase exchanges samples between splits while the total absolute
// per-label deviation still improves. Swaps preserve the exact sizes.
SplitIndices stratified_split(const EmbeddingDataset& ds,
                              const std::array<double, 3>& ratios, std::uint64_t seed) {
    double ratio_sum = 0.0;
    for (double r : ratios) {
        if (r <= 0.0) throw ConfigError("stratified_split: ratios must be positive");
        ratio_sum += r;
    }
    if (std::fabs(ratio_sum - 1.0) > 1e-9) {
        throw ConfigError("stratified_split: ratios must sum to 1, got " +
                          std::to_string(ratio_sum));
    }
    const std::size_t n = ds.size();
    const std::size_t n_labels = ds.vocab.size();
    RngStream rng(mix_seed(seed, 0x73706c6974ULL));  // "split"

    // Exact target sizes by largest remainder.
    std::array<std::size_t, 3> target{};
    {
        std::array<double, 3> exact{};
        std::size_t assigned = 0;
        for (std::size_t j = 0; j < 3; ++j) {
            exact[j] = ratios[j] * static_cast<double>(n);
            target[j] = static_cast<std::size_t>(std::floor(exact[j]));
            assigned += target[j];
        }
        std::array<std::size_t, 3> order{0, 1, 2};
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const double fa = exact[a] - std::floor(exact[a]);
            const double fb = exact[b] - std::floor(exact[b]);
            if (fa != fb) return fa > fb;
            return a < b;
        });
        for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++target[order[k % 3]];
    }

    // quota[l][j]: how many more samples of label l split j still wants.
    std::vector<std::array<double, 3>> quota(n_labels);
    std::vector<std::vector<std::size_t>> members(n_labels);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::uint32_t id : ds.labels[i]) members[id].push_back(i);
    }
    for (std::size_t l = 0; l < n_labels; ++l) {
        for (std::size_t j = 0; j < 3; ++j) {
            quota[l][j] = static_cast<double>(members[l].size()) * ratios[j];
        }
    }

    std::vector<int> assignment(n, -1);
    std::array<std::size_t, 3> used{};
    std::vector<std::size_t> remaining(n_labels);
    for (std::size_t l = 0; l < n_labels; ++l) remaining[l] = members[l].size();

    auto place = [&](std::size_t sample, std::size_t split) {
        assignment[sample] = static_cast<int>(split);
        ++used[split];
        for (std::uint32_t id : ds.labels[sample]) {
            quota[id][split] -= 1.0;
            --remaining[id];
        }
    };

    while (true) {
        std::size_t best_label = n_labels;
        for (std::size_t l = 0; l < n_labels; ++l) {
            if (remaining[l] == 0) continue;
            if (best_label == n_labels || remaining[l] < remaining[best_label]) {
                best_label = l;
            }
        }
        if (best_label == n_labels) break;
        for (std::size_t sample : members[best_label]) {
            if (assignment[sample] != -1) continue;
            double best_quota = 0.0;
            double best_budget = 0.0;
            std::array<std::size_t, 3> tied{};
            std::size_t n_tied = 0;
            for (std::size_t j = 0; j < 3; ++j) {
                const double q = quota[best_label][j];
                const double budget = static_cast<double>(target[j]) -
                                      static_cast<double>(used[j]);
                if (n_tied == 0 || q > best_quota ||
                    (q == best_quota && budget > best_budget)) {
                    best_quota = q;
                    best_budget = budget;
                    tied[0] = j;
                    n_tied = 1;
                } else if (q == best_quota && budget == best_budget) {
                    tied[n_tied++] = j;
                }
            }
            place(sample, n_tied == 1 ? tied[0] : tied[rng.below(n_tied)]);
        }
    }

    // Samples without labels follow the remaining size budget.
    for (std::size_t i = 0; i < n; ++i) {
        if (assignment[i] != -1) continue;
        double best_budget = -1e300;
        std::array<std::size_t, 3> tied{};
        std::size_t n_tied = 0;
        for (std::size_t j = 0; j < 3; ++j) {
            const double budget =
                static_cast<double>(target[j]) - static_cast<double>(used[j]);
            if (n_tied == 0 || budget > best_budget) {
                best_budget = budget;
                tied[0] = j;
                n_tied = 1;
            } else if (budget == best_budget) {
                tied[n_tied++] = j;
            }
        }
        place(i, n_tied == 1 ? tied[0] : tied[rng.below(n_tied)]);
    }

    // Size repair: -quota[l][j] is split j's overshoot for label l, so the
    // move cost is the overshoot gained at the destination minus the
    // overshoot shed at the source.
    while (true) {
        int over = -1, under = -1;
        for (int j = 0; j < 3; ++j) {
            const auto ju = static_cast<std::size_t>(j);
            if (used[ju] > target[ju] &&
                (over == -1 ||
                 used[ju] - target[ju] >
                     used[static_cast<std::size_t>(over)] - target[static_cast<std::size_t>(over)])) {
                over = j;
            }
            if (used[ju] < target[ju] &&
                (under == -1 ||
                 target[ju] - used[ju] >
                     target[static_cast<std::size_t>(under)] - used[static_cast<std::size_t>(under)])) {
                under = j;
            }
        }
        if (over == -1 || under == -1) break;
        const auto src = static_cast<std::size_t>(over);
        const auto dst = static_cast<std::size_t>(under);
        double best_cost = 1e300;
        std::size_t best_sample = n;
        for (std::size_t s = 0; s < n; ++s) {
            if (assignment[s] != over) continue;
            double cost = 0.0;
            for (std::uint32_t id : ds.labels[s]) {
                cost += (-quota[id][dst]) - (-quota[id][src]);
            }
            if (cost < best_cost) {
                best_cost = cost;
                best_sample = s;
            }
        }
        assignment[best_sample] = under;
        --used[src];
        ++used[dst];
        for (std::uint32_t id : ds.labels[best_sample]) {
            quota[id][src] += 1.0;
            quota[id][dst] -= 1.0;
        }
    }

    // Swap polish. Only samples holding a label over-represented in their own
    // split can shed deviation, so the outer scan is restricted to those.
    for (int pass = 0; pass < 4; ++pass) {
        bool improved = false;
        for (std::size_t a = 0; a < n; ++a) {
            const auto ja = static_cast<std::size_t>(assignment[a]);
            bool active = false;
            for (std::uint32_t id : ds.labels[a]) {
                if (-quota[id][ja] >= 0.75) {
                    active = true;
                    break;
                }
            }
            if (!active) continue;
            for (std::size_t b = 0; b < n; ++b) {
                const auto jb = static_cast<std::size_t>(assignment[b]);
                if (ja == jb || a == b) continue;
                double delta = 0.0;
                for (std::uint32_t id : ds.labels[a]) {
                    delta += std::fabs(-quota[id][ja] - 1.0) - std::fabs(-quota[id][ja]);
                    delta += std::fabs(-quota[id][jb] + 1.0) - std::fabs(-quota[id][jb]);
                }
                for (std::uint32_t id : ds.labels[a]) {
                    quota[id][ja] += 1.0;
                    quota[id][jb] -= 1.0;
                }
                for (std::uint32_t id : ds.labels[b]) {
                    delta += std::fabs(-quota[id][jb] - 1.0) - std::fabs(-quota[id][jb]);
                    delta += std::fabs(-quota[id][ja] + 1.0) - std::fabs(-quota[id][ja]);
                }
                if (delta < -1e-9) {
                    for (std::uint32_t id : ds.labels[b]) {
                        quota[id][jb] += 1.0;
                        quota[id][ja] -= 1.0;
                    }
                    std::swap(assignment[a], assignment[b]);
                    improved = true;
                    break;  // a moved splits; rescan from the next sample
                }
                for (std::uint32_t id : ds.labels[a]) {
                    quota[id][ja] -= 1.0;
                    quota[id][jb] += 1.0;
                }
            }
        }
        if (!improved) break;
    }

    SplitIndices out;
    for (std::size_t i = 0; i < n; ++i) {
        switch (assignment[i]) {
            case 0: out.train.push_back(i); break;
            case 1: out.val.push_back(i); break;
            default: out.test.push_back(i); break;
        }
    }
    return out;
}

std::vector<std::vector<std::size_t>> partition_clients(
    const std::vector<std::size_t>& train_indices, std::size_t n_clients,
    std::uint64_t seed) {
    if (n_clients < 1) throw ConfigError("partition_clients: need at least 1 client");
    if (train_indices.size() < n_clients) {
        throw DataError("partition_clients: " + std::to_string(train_indices.size()) +
                        " samples cannot cover " + std::to_string(n_clients) + " clients");
    }
    std::vector<std::size_t> shuffled = train_indices;
    RngStream rng(mix_seed(seed, 0x706172740000ULL));  // "part"
    rng.shuffle(shuffled);
    const std::size_t base = shuffled.size() / n_clients;
    const std::size_t extra = shuffled.size() % n_clients;
    std::vector<std::vector<std::size_t>> clients(n_clients);
    std::size_t pos = 0;
    for (std::size_t c = 0; c < n_clients; ++c) {
        const std::size_t take = base + (c < extra ? 1 : 0);
        clients[c].assign(shuffled.begin() + static_cast<std::ptrdiff_t>(pos),
                          shuffled.begin() + static_cast<std::ptrdiff_t>(pos + take));
        std::sort(clients[c].begin(), clients[c].end());
        pos += take;
    }
    return clients;
}

// ----------------------------------------------------------------- helpers

Matrix gather_rows(const Matrix& x, const std::vector<std::size_t>& indices) {
    Matrix out(indices.size(), x.cols);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const double* src = x.row(indices[i]);
        std::copy(src, src + x.cols, out.row(i));
    }
    return out;
}

}  // namespace fedmlc
