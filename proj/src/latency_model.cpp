#include "alcs/latency_model.hpp"

#include <sys/utsname.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

#include "alcs/sparse_conv.hpp"
#include "alcs/sparse_format.hpp"

namespace alcs {

namespace {

using json = nlohmann::json;
using clock_type = std::chrono::steady_clock;

double to_ms(clock_type::duration d) {
    return std::chrono::duration<double, std::milli>(d).count();
}

// Smallest nonzero delta observed between consecutive clock reads.
double timer_granularity_ms() {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 256; ++i) {
        auto a = clock_type::now();
        auto b = clock_type::now();
        while (b == a) b = clock_type::now();
        best = std::min(best, to_ms(b - a));
    }
    return best;
}

double middle(std::vector<double>& samples) {
    std::sort(samples.begin(), samples.end());
    const std::size_t n = samples.size();
    if (n % 2 == 1) return samples[n / 2];
    return 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
}

}  // namespace

double LayerLatencyProfile::slope(std::size_t i) const {
    const LatencyKnot& a = knots[i];
    const LatencyKnot& b = knots[i + 1];
    return (b.ms - a.ms) / static_cast<double>(b.nnz - a.nnz);
}

void LayerLatencyProfile::validate() const {
    if (knots.size() < 2) throw ShapeError("latency profile needs at least two knots");
    if (knots.front().nnz != 0) throw ShapeError("first latency knot must be at nnz = 0");
    if (knots.back().nnz != total_params())
        throw ShapeError("last latency knot must be at the layer's full parameter count");
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        if (knots[i + 1].nnz <= knots[i].nnz)
            throw ShapeError("latency knots must be strictly increasing in nnz");
    }
    for (const LatencyKnot& k : knots)
        if (!(k.ms >= 0.0) || !std::isfinite(k.ms))
            throw ShapeError("latency knot times must be finite and nonnegative");
}

double estimate_layer(const LayerLatencyProfile& profile, std::int64_t nonzeros) {
    const std::int64_t total = profile.knots.back().nnz;
    if (nonzeros < 0 || nonzeros > total)
        throw DomainError("nonzero count " + std::to_string(nonzeros) + " outside [0, " +
                          std::to_string(total) + "]");
    double t = profile.knots.front().ms;
    for (std::size_t i = 0; i + 1 < profile.knots.size(); ++i) {
        const std::int64_t k_i = profile.knots[i].nnz;
        if (nonzeros < k_i) break;  // delta_i = 0 for this and all later segments
        const std::int64_t seg = profile.knots[i + 1].nnz - k_i;
        t += profile.slope(i) * static_cast<double>(std::min(seg, nonzeros - k_i));
    }
    return t;
}

double NetworkLatencyModel::floor_ms() const {
    double t = tau_ms;
    for (const LayerLatencyProfile& p : layers) t += p.knots.front().ms;
    return t;
}

double NetworkLatencyModel::full_ms() const {
    double t = tau_ms;
    for (const LayerLatencyProfile& p : layers) t += p.knots.back().ms;
    return t;
}

double estimate_network(const NetworkLatencyModel& model,
                        const std::vector<std::int64_t>& nonzeros) {
    if (nonzeros.size() != model.layers.size())
        throw DomainError("expected " + std::to_string(model.layers.size()) +
                          " per-layer nonzero counts, got " + std::to_string(nonzeros.size()));
    double t = model.tau_ms;
    for (std::size_t l = 0; l < model.layers.size(); ++l)
        t += estimate_layer(model.layers[l], nonzeros[l]);
    return t;
}

std::vector<double> default_densities() {
    std::vector<double> d(11);
    for (int i = 0; i <= 10; ++i) d[static_cast<std::size_t>(i)] = i / 10.0;
    return d;
}

std::vector<std::vector<std::int64_t>> knot_unit_patterns(const LayerShape& shape,
                                                          const MeasureOptions& opts) {
    const std::vector<double> densities =
        opts.densities.empty() ? default_densities() : opts.densities;
    const std::int64_t groups = (shape.out_channels + opts.group_size - 1) / opts.group_size;
    const std::int64_t columns =
        static_cast<std::int64_t>(shape.in_channels) * shape.kernel_h * shape.kernel_w;
    const std::int64_t units = groups * columns;

    std::mt19937_64 rng(opts.seed);
    std::vector<std::int64_t> order(static_cast<std::size_t>(units));
    std::vector<std::vector<std::int64_t>> patterns;
    patterns.reserve(densities.size());
    for (double d : densities) {
        if (d < 0.0 || d > 1.0) throw DomainError("density outside [0, 1]");
        std::iota(order.begin(), order.end(), std::int64_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        const auto kept = static_cast<std::size_t>(
            std::floor(d * static_cast<double>(units)));
        std::vector<std::int64_t> pattern(order.begin(), order.begin() + kept);
        std::sort(pattern.begin(), pattern.end());
        patterns.push_back(std::move(pattern));
    }
    return patterns;
}

LayerLatencyProfile measure_layer_profile(const LayerShape& shape, const MeasureOptions& opts) {
    const std::vector<double> densities =
        opts.densities.empty() ? default_densities() : opts.densities;
    if (std::find(densities.begin(), densities.end(), 0.0) == densities.end() ||
        std::find(densities.begin(), densities.end(), 1.0) == densities.end())
        throw DomainError("density list must include 0 and 1");
    if (opts.runs < 1) throw DomainError("runs must be >= 1");

    LayerLatencyProfile profile;
    profile.shape = shape;

    const int columns = shape.in_channels * shape.kernel_h * shape.kernel_w;
    const std::vector<std::vector<std::int64_t>> patterns = knot_unit_patterns(shape, opts);

    std::mt19937_64 value_rng(opts.seed ^ 0x9e3779b97f4a7c15ull);
    std::uniform_real_distribution<float> magnitude(0.25f, 1.0f);
    std::uniform_real_distribution<float> unit_interval(0.0f, 1.0f);

    FeatureMap input(shape.in_channels, shape.in_h, shape.in_w);
    {
        std::mt19937_64 input_rng(opts.seed ^ 0xc2b2ae3d27d4eb4full);
        std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
        for (float& v : input.values) v = dist(input_rng);
    }

    const ConvGeometry geom{shape.stride, shape.pad};
    const double granularity = timer_granularity_ms();

    std::vector<LatencyKnot> raw;
    for (std::size_t di = 0; di < patterns.size(); ++di) {
        DenseKernel dense(shape.out_channels, shape.in_channels, shape.kernel_h, shape.kernel_w);
        std::int64_t nnz = 0;
        for (std::int64_t unit : patterns[di]) {
            const int gi = static_cast<int>(unit / columns);
            const int col = static_cast<int>(unit % columns);
            auto [c, r, s] = offset_to_coords(static_cast<std::uint32_t>(col),
                                              shape.in_channels, shape.kernel_h, shape.kernel_w);
            const int begin = gi * opts.group_size;
            const int end = std::min(begin + opts.group_size, shape.out_channels);
            for (int n = begin; n < end; ++n) {
                const float sign = unit_interval(value_rng) < 0.5f ? -1.0f : 1.0f;
                dense.at(n, c, r, s) = sign * magnitude(value_rng);
                ++nnz;
            }
        }
        const GroupedCsrKernel sparse = compress(dense, opts.group_size);

        for (int i = 0; i < opts.warmup; ++i)
            (void)conv_sparse_vectorized(input, sparse, geom, nullptr, 1);
        std::vector<double> samples(static_cast<std::size_t>(opts.runs));
        for (int i = 0; i < opts.runs; ++i) {
            const auto t0 = clock_type::now();
            (void)conv_sparse_vectorized(input, sparse, geom, nullptr, 1);
            samples[static_cast<std::size_t>(i)] = to_ms(clock_type::now() - t0);
        }
        double ms;
        if (opts.use_mean)
            ms = std::accumulate(samples.begin(), samples.end(), 0.0) /
                 static_cast<double>(samples.size());
        else
            ms = middle(samples);
        if (ms <= granularity)
            profile.warnings.push_back("knot at density " + std::to_string(densities[di]) +
                                       ": measured " + std::to_string(ms) +
                                       " ms is at or below timer granularity " +
                                       std::to_string(granularity) + " ms");
        raw.push_back({nnz, ms});
    }

    // Distinct densities of a tiny layer can hit the same kept count; merge
    // duplicate knots by averaging before enforcing monotonicity.
    std::sort(raw.begin(), raw.end(),
              [](const LatencyKnot& a, const LatencyKnot& b) { return a.nnz < b.nnz; });
    for (std::size_t i = 0; i < raw.size();) {
        std::size_t j = i;
        double sum = 0.0;
        while (j < raw.size() && raw[j].nnz == raw[i].nnz) sum += raw[j++].ms;
        profile.knots.push_back({raw[i].nnz, sum / static_cast<double>(j - i)});
        i = j;
    }
    for (std::size_t i = 1; i < profile.knots.size(); ++i)
        profile.knots[i].ms = std::max(profile.knots[i].ms, profile.knots[i - 1].ms);

    profile.validate();
    return profile;
}

std::string host_descriptor() {
    utsname u{};
    if (uname(&u) != 0) return "unknown";
    return std::string(u.sysname) + " " + u.release + " " + u.machine;
}

std::string latency_model_to_json(const NetworkLatencyModel& model) {
    json root;
    root["tau_ms"] = model.tau_ms;
    root["layers"] = json::array();
    for (const LayerLatencyProfile& p : model.layers) {
        json layer;
        layer["name"] = p.shape.name;
        layer["shape"] = {p.shape.out_channels, p.shape.in_channels, p.shape.kernel_h,
                          p.shape.kernel_w,    p.shape.in_h,        p.shape.in_w,
                          p.shape.stride,      p.shape.pad};
        json knots = json::array();
        for (const LatencyKnot& k : p.knots) knots.push_back({k.nnz, k.ms});
        layer["knots"] = std::move(knots);
        if (!p.warnings.empty()) layer["warnings"] = p.warnings;
        root["layers"].push_back(std::move(layer));
    }
    root["meta"] = {{"runs", model.meta.runs},
                    {"warmup", model.meta.warmup},
                    {"seed", model.meta.seed},
                    {"host", model.meta.host}};
    return root.dump(2) + "\n";
}

NetworkLatencyModel latency_model_from_json(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw DecodeError(DecodeError::Kind::Corrupt,
                          std::string("latency model is not valid JSON: ") + e.what());
    }
    auto schema_error = [](const std::string& msg) {
        return DecodeError(DecodeError::Kind::BadSchema, "latency model: " + msg);
    };
    if (!root.is_object()) throw schema_error("top level must be an object");
    if (!root.contains("tau_ms") || !root["tau_ms"].is_number())
        throw schema_error("missing numeric tau_ms");
    if (!root.contains("layers") || !root["layers"].is_array())
        throw schema_error("missing layers array");

    NetworkLatencyModel model;
    model.tau_ms = root["tau_ms"].get<double>();
    if (model.tau_ms < 0.0) throw schema_error("tau_ms must be nonnegative");

    for (const json& layer : root["layers"]) {
        if (!layer.is_object() || !layer.contains("name") || !layer.contains("shape") ||
            !layer.contains("knots"))
            throw schema_error("layer entries need name, shape and knots");
        const json& shape = layer["shape"];
        if (!shape.is_array() || shape.size() != 8)
            throw schema_error("layer shape must be [o_c,i_c,k_h,k_w,i_h,i_w,stride,pad]");
        LayerLatencyProfile p;
        p.shape.name = layer["name"].get<std::string>();
        p.shape.out_channels = shape[0].get<int>();
        p.shape.in_channels = shape[1].get<int>();
        p.shape.kernel_h = shape[2].get<int>();
        p.shape.kernel_w = shape[3].get<int>();
        p.shape.in_h = shape[4].get<int>();
        p.shape.in_w = shape[5].get<int>();
        p.shape.stride = shape[6].get<int>();
        p.shape.pad = shape[7].get<int>();
        for (const json& k : layer["knots"]) {
            if (!k.is_array() || k.size() != 2 || !k[0].is_number_integer() ||
                !k[1].is_number())
                throw schema_error("knots must be [nnz, ms] pairs");
            p.knots.push_back({k[0].get<std::int64_t>(), k[1].get<double>()});
        }
        if (layer.contains("warnings"))
            p.warnings = layer["warnings"].get<std::vector<std::string>>();
        try {
            p.validate();
        } catch (const ShapeError& e) {
            throw schema_error(e.what());
        }
        for (std::size_t i = 1; i < p.knots.size(); ++i)
            if (p.knots[i].ms < p.knots[i - 1].ms)
                throw schema_error("knot times must be nondecreasing (profiles are stored "
                                   "after isotonic correction)");
        model.layers.push_back(std::move(p));
    }

    if (root.contains("meta")) {
        const json& meta = root["meta"];
        if (!meta.is_object()) throw schema_error("meta must be an object");
        if (meta.contains("runs")) model.meta.runs = meta["runs"].get<int>();
        if (meta.contains("warmup")) model.meta.warmup = meta["warmup"].get<int>();
        if (meta.contains("seed")) model.meta.seed = meta["seed"].get<std::uint64_t>();
        if (meta.contains("host")) model.meta.host = meta["host"].get<std::string>();
    }
    return model;
}

void save_latency_model(const std::filesystem::path& path, const NetworkLatencyModel& model) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << latency_model_to_json(model);
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

NetworkLatencyModel load_latency_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return latency_model_from_json(text);
}

}  // namespace alcs
