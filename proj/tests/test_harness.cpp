#include <psamp/harness.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

using namespace psamp;
using namespace psamp::harness;

namespace {

ExperimentConfig small_recovery()
{
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::RecoverySweep;
    cfg.name = "small";
    cfg.n = 400;
    cfg.gammas = {0.3, 0.5};
    cfg.monte_carlo = 3;
    cfg.policies = {"pwl1", "l1amp"};
    cfg.seed = 77;
    return cfg;
}

ExperimentConfig small_denoise()
{
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::DenoiseSweep;
    cfg.name = "small-denoise";
    cfg.n = 20000;
    cfg.cs = {0.01, 0.1};
    cfg.monte_carlo = 2;
    cfg.policies = {"mmse", "pwl1", "pwl2", "exp", "soft"};
    return cfg;
}

bool same_outcomes(const std::vector<ResultRecord>& a, const std::vector<ResultRecord>& b)
{
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!same_outcome(a[i], b[i])) return false;
    }
    return true;
}

std::filesystem::path temp_dir(const std::string& name)
{
    auto dir = std::filesystem::temp_directory_path() / ("psamp-test-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace

// ----------------------------------------------------------------- config

TEST(Config, JsonRoundTrip)
{
    auto cfg = small_recovery();
    cfg.snr_y_db = std::nullopt;
    cfg.prior = SignalPrior::k_dense(0.2, 1.5);
    cfg.se_gammas = cfg.gammas;
    const auto j = config_to_json(cfg);
    const auto back = config_from_json(j);
    EXPECT_EQ(config_to_json(back), j);
    EXPECT_EQ(back.prior, cfg.prior);
    EXPECT_FALSE(back.snr_y_db);
    EXPECT_EQ(config_hash(back), config_hash(cfg));
}

TEST(Config, MissingKeysKeepDefaults)
{
    const auto cfg = config_from_json(json{{"experiment", "recover"}, {"gammas", {0.4}}});
    EXPECT_EQ(cfg.kind, ExperimentKind::RecoverySweep);
    EXPECT_EQ(cfg.n, 2000);
    EXPECT_EQ(cfg.monte_carlo, 20);
    ASSERT_TRUE(cfg.snr_y_db);
    EXPECT_EQ(*cfg.snr_y_db, 25.0);
}

TEST(Config, RejectsInvalidEntries)
{
    const json ok{{"experiment", "recover"}, {"gammas", {0.4}}};
    auto with = [&](const char* key, json value) {
        json j = ok;
        j[key] = std::move(value);
        return j;
    };
    EXPECT_NO_THROW(config_from_json(ok));
    EXPECT_THROW(config_from_json(with("bogus", 1)), ConfigurationError);
    EXPECT_THROW(config_from_json(with("monte_carlo", 0)), ConfigurationError);
    EXPECT_THROW(config_from_json(with("gammas", {0.4, 1.5})), ConfigurationError);
    EXPECT_THROW(config_from_json(with("gammas", json::array())), ConfigurationError);
    EXPECT_THROW(config_from_json(with("policies", {"pwl1", "magic"})), ConfigurationError);
    EXPECT_THROW(config_from_json(with("policies", {"mmse"})), ConfigurationError);
    EXPECT_THROW(config_from_json(with("experiment", "plot")), ConfigurationError);
    EXPECT_THROW(config_from_json(with("n", "many")), ConfigurationError);
    EXPECT_THROW(config_from_json(with("l1_kappa", 0.5)), ConfigurationError);
    EXPECT_THROW(config_from_json(json::array()), ConfigurationError);

    json denoise{{"experiment", "denoise-sweep"}, {"policies", {"mmse"}}};
    EXPECT_THROW(config_from_json(denoise), ConfigurationError);
    denoise["cs"] = {0.1, -1.0};
    EXPECT_THROW(config_from_json(denoise), ConfigurationError);
    denoise["cs"] = {0.1};
    EXPECT_NO_THROW(config_from_json(denoise));
}

TEST(Config, MismatchedStateEvolutionGrid)
{
    json j{{"experiment", "se-compare"}, {"gammas", {0.2, 0.3}}, {"se_gammas", {0.2, 0.25}}};
    EXPECT_THROW(config_from_json(j), ConfigurationError);
    j["se_gammas"] = {0.2, 0.3};
    EXPECT_NO_THROW(config_from_json(j));

    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::SeCompare;
    cfg.gammas = {0.5};
    cfg.se_gammas = std::vector<double>{0.4};
    EXPECT_THROW(run_se_compare(cfg), ConfigurationError);
}

TEST(Config, RuntimeNeedsOneRatioAndSizes)
{
    json j{{"experiment", "runtime"}, {"gammas", {0.5}}};
    EXPECT_THROW(config_from_json(j), ConfigurationError);
    j["sizes"] = {100, 200};
    EXPECT_NO_THROW(config_from_json(j));
    j["gammas"] = {0.4, 0.5};
    EXPECT_THROW(config_from_json(j), ConfigurationError);
}

TEST(Config, LoadFromFile)
{
    const auto dir = temp_dir("config");
    {
        std::ofstream(dir / "good.json") << R"({"experiment": "recover", "gammas": [0.3], "seed": 9, "snr_y_db": null})";
        std::ofstream(dir / "bad.json") << R"({"experiment": "recover", "gammas": [0.3],)";
    }
    const auto cfg = load_config((dir / "good.json").string());
    EXPECT_EQ(cfg.seed, 9u);
    EXPECT_FALSE(cfg.snr_y_db);
    EXPECT_THROW(load_config((dir / "bad.json").string()), ConfigurationError);
    EXPECT_THROW(load_config((dir / "missing.json").string()), ConfigurationError);
}

TEST(Config, ScaleMultipliesLengthsAndDividesDraws)
{
    auto cfg = small_recovery();
    cfg.sizes = {100, 300};
    const auto up = scaled(cfg, 2.0);
    EXPECT_EQ(up.n, 800);
    EXPECT_EQ(up.sizes, (std::vector<Eigen::Index>{200, 600}));
    EXPECT_EQ(up.monte_carlo, 2); // ceil(3 / 2)
    const auto down = scaled(cfg, 0.5);
    EXPECT_EQ(down.n, 200);
    EXPECT_EQ(down.monte_carlo, 6);
    EXPECT_THROW(scaled(cfg, 0.0), ConfigurationError);
    EXPECT_THROW(scaled(cfg, -1.0), ConfigurationError);
}

TEST(Config, HashIgnoresOutputPathOnly)
{
    auto a = small_recovery();
    auto b = a;
    b.output = "elsewhere.csv";
    EXPECT_EQ(config_hash(a), config_hash(b));
    b.seed += 1;
    EXPECT_NE(config_hash(a), config_hash(b));
    b = a;
    b.gammas.back() = 0.51;
    EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Config, Fnv1aReferenceValues)
{
    EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
    EXPECT_EQ(fnv1a("foobar"), 0x85944171f73967e8ULL);
}

// --------------------------------------------------------- serialization

TEST(Serialization, PriorRoundTrip)
{
    for (const auto& p : {SignalPrior::bernoulli_gaussian(0.05, 2.0), SignalPrior::k_dense(0.3, 0.5),
                          SignalPrior::student_t(2.5), SignalPrior::student_t(1.67, StudentTForm::Literal)}) {
        const auto j = prior_to_json(p);
        EXPECT_EQ(prior_from_json(j), p) << j.dump();
        EXPECT_EQ(prior_from_json(json::parse(j.dump())), p);
    }
}

TEST(Serialization, PriorErrors)
{
    EXPECT_THROW(prior_from_json(json{{"kind", "laplace"}}), ConfigurationError);
    EXPECT_THROW(prior_from_json(json{{"params", json::object()}}), ConfigurationError);
    EXPECT_THROW(prior_from_json(json{{"kind", "bernoulli_gaussian"}, {"params", {{"sparsity", 1.5}}}}),
                 ConfigurationError);
    EXPECT_THROW(prior_from_json(json{{"kind", "student_t"}, {"params", {{"form", "odd"}}}}), ConfigurationError);
    EXPECT_THROW(prior_from_json(json{{"kind", "k_dense"}, {"params", {{"magnitude", "big"}}}}), ConfigurationError);
}

TEST(Serialization, DenoiserSpecRoundTripIsExact)
{
    const Vector x = sample_prior(SignalPrior::bernoulli_gaussian(0.1, 1.0), 5000, 3);
    const Vector r = x + gaussian_vector(5000, 4, std::sqrt(0.1));
    for (const auto& fam : {KernelFamily::piecewise_linear1(), KernelFamily::piecewise_linear2(),
                            KernelFamily::exponential(), KernelFamily::exponential(ExpWidth::SixSqrtC)}) {
        const auto spec = optimize_weights(r, 0.1, fam);
        const auto j = denoiser_spec_to_json(spec);
        EXPECT_EQ(j.at("family"), fam.name());
        const auto back = denoiser_spec_from_json(json::parse(j.dump()));
        EXPECT_EQ(back.weights, spec.weights);
        EXPECT_EQ(back.c, spec.c);
        const auto a = apply_denoiser(spec, r), b = apply_denoiser(back, r);
        EXPECT_EQ(a.x_hat, b.x_hat);
        EXPECT_EQ(a.mean_derivative, b.mean_derivative);
    }
}

TEST(Serialization, DenoiserSpecErrors)
{
    EXPECT_THROW(denoiser_spec_from_json(json{{"family", "mine"}, {"c", 0.1}, {"weights", {1.0}}}), CapabilityError);
    EXPECT_THROW(denoiser_spec_from_json(json{{"family", "pwl1"}, {"c", 0.1}, {"weights", {1.0}}}), ParameterError);
    EXPECT_THROW(denoiser_spec_from_json(json{{"family", "exp"}, {"c", 0.0}, {"weights", {1.0, 0.0}}}),
                 ConfigurationError);
}

// --------------------------------------------------------------------- CSV

TEST(Csv, HeaderMatchesSchema)
{
    std::ostringstream out;
    write_csv(out, {});
    EXPECT_EQ(out.str(),
              "experiment,prior,policy,gamma,c,snr_y_db,seed,metric_name,metric_value,iterations,wall_ms,mode,n\n");
}

TEST(Csv, RandomRecordsRoundTripExactly)
{
    std::mt19937_64 eng(2024);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<int> pick(0, 9);
    const std::vector<std::string> words{"pwl1", "bamp", "l1amp", "exp-wide", "bg(0.1,1)", "x y", ""};
    std::vector<ResultRecord> recs;
    for (int i = 0; i < 500; ++i) {
        ResultRecord r;
        r.experiment = words[static_cast<std::size_t>(pick(eng)) % words.size()];
        r.prior = words[static_cast<std::size_t>(pick(eng)) % words.size()];
        r.policy = words[static_cast<std::size_t>(pick(eng)) % words.size()];
        if (pick(eng) > 2) r.gamma = std::abs(u(eng));
        if (pick(eng) > 4) r.c = std::exp(20 * u(eng));
        if (pick(eng) > 5) r.snr_y_db = 40 * u(eng);
        r.seed = eng();
        r.metric_name = pick(eng) > 5 ? "mse" : "snr_x_db";
        switch (pick(eng)) {
        case 0: r.metric_value = std::numeric_limits<double>::quiet_NaN(); break;
        case 1: r.metric_value = std::numeric_limits<double>::infinity(); break;
        case 2: r.metric_value = std::numeric_limits<double>::denorm_min(); break;
        default: r.metric_value = std::ldexp(u(eng), pick(eng) * 30 - 150);
        }
        r.iterations = pick(eng) * 11;
        r.wall_ms = std::abs(u(eng)) * 1e4;
        r.mode = pick(eng) > 4 ? "matrix" : "se";
        r.n = pick(eng) * 1000 + 1;
        recs.push_back(r);
    }
    std::stringstream buf;
    write_csv(buf, recs);
    const auto back = read_csv(buf);
    ASSERT_EQ(back.size(), recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
        auto expected = recs[i];
        for (auto* s : {&expected.experiment, &expected.prior, &expected.policy}) {
            for (char& ch : *s) {
                if (ch == ',') ch = ';';
            }
        }
        EXPECT_TRUE(same_outcome(back[i], expected)) << i;
        EXPECT_EQ(back[i].wall_ms, expected.wall_ms);
    }
}

TEST(Csv, ColumnsFoundByNameAndMissingOnesNamed)
{
    std::stringstream extra("n,extra,mode,wall_ms,iterations,metric_value,metric_name,seed,snr_y_db,c,gamma,policy,"
                            "prior,experiment\n5,zz,se,1.5,3,0.25,mse,42,,0.1,,pwl1,bg,e\n");
    const auto recs = read_csv(extra);
    ASSERT_EQ(recs.size(), 1u);
    EXPECT_EQ(recs[0].n, 5);
    EXPECT_EQ(recs[0].seed, 42u);
    EXPECT_EQ(recs[0].metric_value, 0.25);
    EXPECT_FALSE(recs[0].gamma);
    EXPECT_EQ(*recs[0].c, 0.1);

    std::stringstream missing("experiment,prior,policy,gamma,c,snr_y_db,seed,metric_name,iterations,wall_ms,mode,n\n");
    try {
        read_csv(missing);
        FAIL() << "expected a ConfigurationError";
    } catch (const ConfigurationError& e) {
        EXPECT_NE(std::string(e.what()).find("metric_value"), std::string::npos);
    }
}

TEST(Csv, MalformedInputs)
{
    std::stringstream empty;
    EXPECT_THROW(read_csv(empty), ConfigurationError);
    const std::string header =
        "experiment,prior,policy,gamma,c,snr_y_db,seed,metric_name,metric_value,iterations,wall_ms,mode,n\n";
    std::stringstream short_row(header + "e,p,q,,,,1,mse,0.1,0,1,se\n");
    EXPECT_THROW(read_csv(short_row), ConfigurationError);
    std::stringstream bad_number(header + "e,p,q,abc,,,1,mse,0.1,0,1,se,10\n");
    EXPECT_THROW(read_csv(bad_number), ConfigurationError);
    std::stringstream bad_seed(header + "e,p,q,,,,x,mse,0.1,0,1,se,10\n");
    EXPECT_THROW(read_csv(bad_seed), ConfigurationError);
    std::stringstream header_only(header);
    EXPECT_TRUE(read_csv(header_only).empty());
}

// -------------------------------------------------------------------- pool

TEST(Pool, ResultsInIndexOrderForAnyThreadCount)
{
    for (unsigned threads : {1u, 2u, 3u, 8u, 64u}) {
        const auto out = parallel_map(37, threads, [](std::size_t i) { return i * i; });
        ASSERT_EQ(out.size(), 37u);
        for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i], i * i);
    }
    EXPECT_TRUE(parallel_map(0, 4, [](std::size_t i) { return i; }).empty());
}

TEST(Pool, RethrowsLowestFailingIndex)
{
    for (unsigned threads : {1u, 4u}) {
        try {
            parallel_map(20, threads, [](std::size_t i) -> int {
                if (i == 7 || i == 13) throw std::runtime_error("task " + std::to_string(i));
                return 0;
            });
            FAIL();
        } catch (const std::runtime_error& e) {
            EXPECT_STREQ(e.what(), "task 7");
        }
    }
}

// ------------------------------------------------------------ experiments

TEST(DenoiseSweep, RecordsAndFittedDenoisers)
{
    const auto cfg = small_denoise();
    const auto out = run_denoise_sweep(cfg, {1, nullptr});
    // Per cell: mse for 5 denoisers plus sure for the 3 parametric ones.
    EXPECT_EQ(out.records.size(), 2u * 2u * 8u);
    EXPECT_EQ(out.denoisers.size(), 2u * 3u); // first draw of each noise level
    for (const auto& r : out.records) {
        EXPECT_EQ(r.mode, "denoise");
        EXPECT_TRUE(r.c);
        EXPECT_FALSE(r.gamma);
        EXPECT_EQ(r.n, 20000);
        EXPECT_TRUE(std::isfinite(r.metric_value));
    }
    for (const auto& d : out.denoisers) EXPECT_NO_THROW(denoiser_spec_from_json(d));
    EXPECT_LT(mean_metric(out.records, {.policy = "mmse", .metric = "mse", .c = 0.1}),
              mean_metric(out.records, {.policy = "soft", .metric = "mse", .c = 0.1}));
}

TEST(DenoiseSweep, SmallNoiseGivesSmallErrorWhenIdentityInSpan)
{
    for (const auto& prior : {SignalPrior::bernoulli_gaussian(0.1, 1.0), SignalPrior::k_dense(0.1),
                              SignalPrior::student_t(1.67)}) {
        auto cfg = small_denoise();
        cfg.prior = prior;
        cfg.cs = {1e-8};
        cfg.monte_carlo = 1;
        cfg.policies = {"pwl1", "exp", "pwl2"};
        const auto out = run_denoise_sweep(cfg, {1, nullptr});
        for (const auto& r : out.records) {
            if (r.metric_name != "mse") continue;
            if (r.policy == "pwl2") {
                if (prior.kind != PriorKind::KDense) EXPECT_GT(r.metric_value, 1e-4) << describe(prior);
            } else {
                EXPECT_LT(r.metric_value, 2e-8) << describe(prior) << ' ' << r.policy;
            }
        }
    }
}

TEST(DenoiseSweep, AnalyticMmseNeedsClosedForm)
{
    auto cfg = small_denoise();
    cfg.prior = SignalPrior::student_t(1.67);
    cfg.policies = {"pwl1", "mmse"};
    EXPECT_THROW(run_denoise_sweep(cfg), CapabilityError);
    cfg.policies = {"mmse-numeric"};
    cfg.n = 200;
    EXPECT_NO_THROW(run_denoise_sweep(cfg, {1, nullptr}));
}

TEST(DenoiseSweep, IndependentOfThreadCount)
{
    const auto cfg = small_denoise();
    const auto a = run_denoise_sweep(cfg, {1, nullptr});
    const auto b = run_denoise_sweep(cfg, {4, nullptr});
    EXPECT_TRUE(same_outcomes(a.records, b.records));
    EXPECT_EQ(a.denoisers, b.denoisers);
}

TEST(RecoverySweep, RecordsCarryReproducingSeed)
{
    const auto cfg = small_recovery();
    const auto out = run_recovery_sweep(cfg, {2, nullptr});
    EXPECT_EQ(out.records.size(), 2u * 3u * 2u * 2u);
    EXPECT_TRUE(out.errors.empty());
    const auto& rec = out.records.front();
    ASSERT_EQ(rec.metric_name, "snr_x_db");
    const auto pr = make_problem(cfg.prior, cfg.n, *rec.gamma, cfg.snr_y_db, rec.seed);
    const auto res = amp_run(pr.op, pr.meas.y, make_policy(rec.policy, cfg.prior, cfg.l1_kappa));
    EXPECT_EQ(snr_x(pr.x, res.x_hat), rec.metric_value);
    EXPECT_EQ(res.iterations, rec.iterations);
}

TEST(RecoverySweep, BitwiseRepeatableAcrossThreads)
{
    const auto cfg = small_recovery();
    const auto a = run_recovery_sweep(cfg, {1, nullptr});
    const auto b = run_recovery_sweep(cfg, {3, nullptr});
    EXPECT_TRUE(same_outcomes(a.records, b.records));
    auto other = cfg;
    other.seed += 1;
    EXPECT_FALSE(same_outcomes(a.records, run_recovery_sweep(other, {1, nullptr}).records));
}

TEST(RecoverySweep, FailedSeedsAreRecordedAndSweepContinues)
{
    auto cfg = small_recovery();
    cfg.prior = SignalPrior::bernoulli_gaussian(0.0, 1.0); // zero signal: SNR calibration impossible
    cfg.gammas = {0.5};
    cfg.monte_carlo = 2;
    const auto out = run_recovery_sweep(cfg, {1, nullptr});
    EXPECT_EQ(out.errors.size(), 4u);
    ASSERT_EQ(out.records.size(), 4u);
    for (const auto& r : out.records) EXPECT_TRUE(std::isnan(r.metric_value));
}

TEST(RecoverySweep, WrongKindIsRejected)
{
    EXPECT_THROW(run_recovery_sweep(small_denoise()), ConfigurationError);
    EXPECT_THROW(run_denoise_sweep(small_recovery()), ConfigurationError);
}

TEST(SeCompare, PairedRecordsOnSameGrid)
{
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::SeCompare;
    cfg.name = "se";
    cfg.n = 500;
    cfg.gammas = {0.4, 0.6};
    cfg.monte_carlo = 2;
    cfg.se_iterations = 5;
    cfg.se_samples = 10000;
    cfg.policies = {"pwl1", "bamp"};
    const auto out = run_se_compare(cfg, {2, nullptr});
    for (const char* mode : {"matrix", "se"}) {
        for (double g : cfg.gammas) {
            for (int t = 1; t <= 5; ++t) {
                const double v = mean_metric(out.records, {.policy = "pwl1", .metric = "mse", .mode = mode, .gamma = g, .iterations = t});
                EXPECT_TRUE(std::isfinite(v) && v > 0.0) << mode << ' ' << g << ' ' << t;
            }
        }
    }
    // Matrix: 2 gammas x 2 draws x 2 policies x 5 iterations x 2 metrics;
    // state evolution: 2 gammas x 2 policies x 5 x 2.
    EXPECT_EQ(out.records.size(), 80u + 40u);
    const auto again = run_se_compare(cfg, {1, nullptr});
    EXPECT_TRUE(same_outcomes(out.records, again.records));
}

TEST(RuntimeSweep, MediansPerSizeAndPolicy)
{
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::RuntimeSweep;
    cfg.name = "rt";
    cfg.gammas = {0.5};
    cfg.sizes = {100, 200};
    cfg.monte_carlo = 2;
    cfg.policies = {"pwl1", "l1amp"};
    const auto out = run_runtime_sweep(cfg);
    ASSERT_EQ(out.records.size(), 2u * 2u * 2u);
    for (const auto& r : out.records) {
        EXPECT_GT(r.metric_value, 0.0);
        EXPECT_GE(r.iterations, 1);
    }
    EXPECT_EQ(out.records[0].n, 100);
    EXPECT_EQ(out.records.back().n, 200);
}

TEST(Outputs, CsvAndSidecarOnDisk)
{
    const auto dir = temp_dir("outputs");
    const auto cfg = small_recovery();
    const auto out = run_recovery_sweep(cfg, {1, nullptr});
    const auto csv = dir / "nested" / "run.csv";
    write_outputs(out, csv);
    std::ifstream in(csv);
    const auto back = read_csv(in);
    EXPECT_TRUE(same_outcomes(back, out.records));

    std::ifstream side(dir / "nested" / "run.json");
    const auto j = json::parse(side);
    EXPECT_EQ(j.at("schema_version"), kSchemaVersion);
    EXPECT_EQ(j.at("library_version"), kVersion);
    EXPECT_EQ(j.at("csv"), "run.csv");
    EXPECT_EQ(j.at("columns").get<std::vector<std::string>>(), csv_columns());
    EXPECT_EQ(config_from_json(j.at("config")).gammas, cfg.gammas);
    EXPECT_EQ(j.at("config_hash").get<std::string>().size(), 16u);
    EXPECT_TRUE(j.at("errors").empty());
}

// ------------------------------------------------------- presets, checks

TEST(Presets, AllValidAndUnique)
{
    std::set<std::string> names;
    for (const auto& p : presets()) {
        EXPECT_TRUE(names.insert(p.name).second) << p.name;
        EXPECT_NO_THROW(validate(p.config)) << p.name;
        EXPECT_NO_THROW(validate(full_scale(p.config))) << p.name;
        EXPECT_FALSE(p.description.empty());
    }
    EXPECT_EQ(find_preset("recover-bg").config.n, 2000);
    EXPECT_EQ(find_preset("recover-bg").config.monte_carlo, 20);
    EXPECT_EQ(full_scale(find_preset("recover-bg").config).n, 10000);
    EXPECT_EQ(full_scale(find_preset("recover-bg").config).monte_carlo, 100);
    EXPECT_THROW(find_preset("no-such-preset"), ConfigurationError);
}

namespace {

ResultRecord snr_record(const std::string& policy, double gamma, double value)
{
    ResultRecord r;
    r.policy = policy;
    r.gamma = gamma;
    r.metric_name = "snr_x_db";
    r.metric_value = value;
    r.mode = "matrix";
    return r;
}

const CheckResult& named(const std::vector<CheckResult>& checks, const std::string& prefix)
{
    for (const auto& c : checks) {
        if (c.name.rfind(prefix, 0) == 0) return c;
    }
    throw std::runtime_error("no check named " + prefix);
}

} // namespace

TEST(Checks, RecoveryOrderingAndGaps)
{
    ExperimentOutput out;
    out.config = find_preset("recover-bg").config;
    for (double g : {0.24, 0.3, 0.4}) {
        out.records.push_back(snr_record("bamp", g, 20.0));
        out.records.push_back(snr_record("bamp", g, 22.0));
        out.records.push_back(snr_record("pwl1", g, 20.6));
    }
    out.records.push_back(snr_record("exp", 0.4, 20.0));
    out.records.push_back(snr_record("l1amp", 0.4, 18.0));
    auto checks = run_checks(out);
    EXPECT_TRUE(named(checks, "pwl1 within 0.5 dB of bamp at gamma=0.3").passed);
    EXPECT_TRUE(named(checks, "ordering").passed);
    EXPECT_TRUE(named(checks, "pwl1 - l1amp").passed);

    out.records.push_back(snr_record("pwl1", 0.3, 19.0)); // pwl1 mean at 0.3 drops to 19.8
    out.records.push_back(snr_record("l1amp", 0.4, 23.0)); // l1amp mean 20.5 now beats exp
    checks = run_checks(out);
    EXPECT_FALSE(named(checks, "pwl1 within 0.5 dB of bamp at gamma=0.3").passed);
    EXPECT_FALSE(named(checks, "ordering").passed);
    EXPECT_FALSE(named(checks, "pwl1 - l1amp").passed);
}

TEST(Checks, DenoiseReferenceTolerance)
{
    ExperimentOutput out;
    out.config = find_preset("denoise-bg").config;
    auto mse = [](const std::string& policy, double v) {
        ResultRecord r;
        r.policy = policy;
        r.c = 0.1;
        r.metric_name = "mse";
        r.metric_value = v;
        r.mode = "denoise";
        return r;
    };
    out.records = {mse("mmse", 0.020615 * 1.049), mse("pwl1", 0.020788 * 0.951), mse("exp", 0.022047 * 1.06)};
    const auto checks = run_checks(out);
    ASSERT_EQ(checks.size(), 3u);
    EXPECT_TRUE(checks[0].passed);
    EXPECT_TRUE(checks[1].passed);
    EXPECT_FALSE(checks[2].passed);
}

TEST(Checks, MissingSuiteAndNoSuite)
{
    ExperimentOutput out;
    out.config = small_recovery();
    EXPECT_TRUE(run_checks(out).empty());
    out.config.checks = "nonsense";
    EXPECT_THROW(run_checks(out), ConfigurationError);
}
