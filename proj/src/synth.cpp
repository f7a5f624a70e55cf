#include "rlus/synth.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

namespace rlus {

void InstanceConfig::validate() const {
    if (d < 1 || n < d)
        throw std::invalid_argument("InstanceConfig: require n >= d >= 1");
    if (m < 1) throw std::invalid_argument("InstanceConfig: require m >= 1");
    if (r < 1 || n % r != 0) throw std::invalid_argument("InstanceConfig: r must divide n");
    if (snr_db && !std::isfinite(*snr_db))
        throw std::invalid_argument("InstanceConfig: snr_db must be finite (omit it for noiseless)");
}

nlohmann::json to_json(const InstanceConfig& cfg) {
    nlohmann::json j{{"n", cfg.n}, {"d", cfg.d}, {"m", cfg.m}, {"r", cfg.r}, {"seed", cfg.seed}};
    j["snr_db"] = cfg.snr_db ? nlohmann::json(*cfg.snr_db) : nlohmann::json(nullptr);
    return j;
}

InstanceConfig config_from_json(const nlohmann::json& j) {
    InstanceConfig cfg;
    cfg.n = j.at("n").get<Index>();
    cfg.d = j.at("d").get<Index>();
    cfg.m = j.at("m").get<Index>();
    cfg.r = j.at("r").get<Index>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("snr_db") && !j.at("snr_db").is_null()) cfg.snr_db = j.at("snr_db").get<double>();
    cfg.validate();
    return cfg;
}

double noise_variance(double clean_energy, Index n, double snr_db) {
    return clean_energy / (static_cast<double>(n) * std::pow(10.0, snr_db / 10.0));
}

namespace {

Matrix standard_normal(Index rows, Index cols, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix m(rows, cols);
    // Row-major fill order so the stream layout does not depend on Eigen storage.
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
    return m;
}

SensingInstance draw(const InstanceConfig& cfg, bool shuffle) {
    cfg.validate();
    Rng rng(cfg.seed);
    SensingInstance inst;
    inst.config = cfg;
    inst.B = standard_normal(cfg.n, cfg.d, rng);
    inst.X_star = standard_normal(cfg.d, cfg.m, rng);
    inst.pi_star = sample_rlocal(cfg.n, cfg.r, rng);
    if (!shuffle) inst.pi_star = RLocalPermutation::identity(cfg.n, cfg.r);
    inst.Y_clean = inst.B * inst.X_star;
    inst.Y = apply(inst.pi_star, inst.Y_clean);
    if (cfg.snr_db) {
        inst.sigma2 = noise_variance(inst.Y_clean.squaredNorm(), cfg.n, *cfg.snr_db);
        const Matrix noise = standard_normal(cfg.n, cfg.m, rng) * std::sqrt(inst.sigma2);
        inst.Y += noise;
    }
    return inst;
}

}  // namespace

SensingInstance generate(const InstanceConfig& cfg) { return draw(cfg, true); }

SensingInstance generate_unshuffled(const InstanceConfig& cfg) { return draw(cfg, false); }

double empirical_snr(const SensingInstance& inst) {
    if (inst.sigma2 <= 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(inst.Y_clean.squaredNorm() /
                             (static_cast<double>(inst.Y_clean.rows()) * inst.sigma2));
}

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
    for (int b = 0; b < 4; ++b) os.put(static_cast<char>((v >> (8 * b)) & 0xFFu));
}

std::uint32_t get_u32(std::istream& is) {
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) {
        const int c = is.get();
        if (c == std::char_traits<char>::eof()) throw std::runtime_error("matrix file truncated");
        v |= static_cast<std::uint32_t>(c & 0xFF) << (8 * b);
    }
    return v;
}

}  // namespace

void write_matrix_bin(const std::filesystem::path& path, const Matrix& m) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    os.write("RLUS", 4);
    put_u32(os, static_cast<std::uint32_t>(m.rows()));
    put_u32(os, static_cast<std::uint32_t>(m.cols()));
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) {
            const auto bits = std::bit_cast<std::uint64_t>(m(i, j));
            for (int b = 0; b < 8; ++b) os.put(static_cast<char>((bits >> (8 * b)) & 0xFFu));
        }
}

Matrix read_matrix_bin(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    char magic[4];
    is.read(magic, 4);
    if (!is || std::string(magic, 4) != "RLUS")
        throw std::runtime_error(path.string() + ": bad magic");
    const auto rows = get_u32(is);
    const auto cols = get_u32(is);
    Matrix m(rows, cols);
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) {
            std::uint64_t bits = 0;
            for (int b = 0; b < 8; ++b) {
                const int c = is.get();
                if (c == std::char_traits<char>::eof())
                    throw std::runtime_error(path.string() + ": truncated");
                bits |= static_cast<std::uint64_t>(c & 0xFF) << (8 * b);
            }
            m(i, j) = std::bit_cast<double>(bits);
        }
    return m;
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    os << std::setprecision(17);
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) os << (j ? "," : "") << m(i, j);
        os << '\n';
    }
}

void save_instance(const SensingInstance& inst, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto cfg = to_json(inst.config);
    cfg["sigma2"] = inst.sigma2;
    std::ofstream(dir / "config.json") << cfg.dump(2) << '\n';
    std::ofstream(dir / "pi_star.json") << to_json(inst.pi_star).dump() << '\n';
    write_matrix_bin(dir / "B.bin", inst.B);
    write_matrix_bin(dir / "X_star.bin", inst.X_star);
    write_matrix_bin(dir / "Y.bin", inst.Y);
    write_matrix_bin(dir / "Y_clean.bin", inst.Y_clean);
    write_matrix_csv(dir / "B.csv", inst.B);
    write_matrix_csv(dir / "Y.csv", inst.Y);
}

SensingInstance load_instance(const std::filesystem::path& dir) {
    std::ifstream cfg_in(dir / "config.json");
    if (!cfg_in) throw std::runtime_error("missing " + (dir / "config.json").string());
    const auto cfg_json = nlohmann::json::parse(cfg_in);
    std::ifstream pi_in(dir / "pi_star.json");
    if (!pi_in) throw std::runtime_error("missing " + (dir / "pi_star.json").string());

    SensingInstance inst;
    inst.config = config_from_json(cfg_json);
    inst.sigma2 = cfg_json.value("sigma2", 0.0);
    inst.pi_star = rlocal_from_json(nlohmann::json::parse(pi_in));
    inst.B = read_matrix_bin(dir / "B.bin");
    inst.X_star = read_matrix_bin(dir / "X_star.bin");
    inst.Y = read_matrix_bin(dir / "Y.bin");
    inst.Y_clean = read_matrix_bin(dir / "Y_clean.bin");
    return inst;
}

}  // namespace rlus
