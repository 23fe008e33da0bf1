#include <doctest.h>

#include <algorithm>
#include <map>

#include <json.hpp>

#include "fundus/error.hpp"
#include "fundus/model_io.hpp"
#include "fundus/orchestrate.hpp"
#include "fundus/synthetic.hpp"
#include "test_util.hpp"

using namespace fundus;

namespace {

ArchDescriptor small_arch() {
    ArchDescriptor a;
    a.input_size = 32;
    a.stage_channels = {4, 8, 8, 8};
    a.head_hidden = 8;
    return a;
}

SyntheticOptions small_images() {
    SyntheticOptions o;
    o.size = 32;
    o.blob_sigma_min = 2.0;
    o.blob_sigma_max = 3.0;
    o.ring_radius_min = 5.0;
    o.ring_radius_max = 8.0;
    return o;
}

void labelled(std::size_t pos, std::size_t neg, std::vector<std::string>& ids, std::vector<int>& labels) {
    for (std::size_t i = 0; i < pos + neg; ++i) {
        ids.push_back("img" + std::to_string(i));
        labels.push_back(i < pos ? 1 : 0);
    }
}

}  // namespace

TEST_CASE("manifest parsing") {
    const auto m = parse_manifest("path,label\na.ppm,1\nsub/b.ppm,0\n", "/data");
    REQUIRE(m.entries.size() == 2);
    CHECK(m.entries[0].path == "/data/a.ppm");
    CHECK(m.entries[0].label == 1);
    CHECK(m.entries[1].id == "sub/b.ppm");
    CHECK(m.warnings.empty());

    CHECK_THROWS_WITH_AS(parse_manifest("path,label\na.ppm,1\nb.ppm,2\n", "."), doctest::Contains(":3:"),
                         ConfigError);
    CHECK_THROWS_AS(parse_manifest("file,label\na.ppm,1\n", "."), ConfigError);
    CHECK_THROWS_AS(parse_manifest("", "."), ConfigError);
    CHECK_THROWS_AS(parse_manifest("path,label\na.ppm\n", "."), ConfigError);

    const auto dup = parse_manifest("path,label\na.ppm,1\na.ppm,0\n", ".");
    REQUIRE(dup.entries.size() == 2);
    CHECK(dup.entries[0].id == "a.ppm");
    CHECK(dup.entries[1].id == "a.ppm#3");
    CHECK(dup.warnings.size() == 1);

    // Paths with commas split on the last one.
    CHECK(parse_manifest("path,label\nx,y.ppm,0\n", "/").entries[0].id == "x,y.ppm");

    ManifestOptions bin;
    bin.binarize = true;
    const auto graded = parse_manifest("path,grade\na,0\nb,2\nc,3\nd,4\n", ".", bin);
    std::vector<int> labels;
    for (const auto& e : graded.entries) labels.push_back(e.label);
    CHECK(labels == std::vector<int>{0, 0, 1, 1});
    CHECK_THROWS_AS(parse_manifest("path,grade\na,5\n", ".", bin), ConfigError);
    bin.referable_grade = 2;
    CHECK(parse_manifest("path,grade\nb,2\n", ".", bin).entries[0].label == 1);
}

TEST_CASE("load_manifest resolves against its directory") {
    testutil::TempDir dir("manifest");
    write_text_file(dir.str("m.csv"), "path,label\nimg.ppm,0\n");
    const auto m = load_manifest(dir.str("m.csv"));
    CHECK(m.entries[0].path == dir.str("img.ppm"));
    CHECK_THROWS_AS(load_manifest(dir.str("missing.csv")), IoError);
}

TEST_CASE("binarize_grade") {
    CHECK(binarize_grade(3) == 1);
    CHECK(binarize_grade(4) == 1);
    CHECK(binarize_grade(0) == 0);
    CHECK(binarize_grade(2) == 0);
    CHECK_THROWS_AS(binarize_grade(5), ConfigError);
    CHECK_THROWS_AS(binarize_grade(-1), ConfigError);
}

TEST_CASE("stratified folds") {
    auto counts = [](const FoldPlan& plan, const std::vector<int>& labels) {
        std::vector<std::array<int, 2>> c(plan.k, {0, 0});
        for (std::size_t i = 0; i < labels.size(); ++i) c[plan.assignments[i]][labels[i]]++;
        return c;
    };

    SUBCASE("even split") {
        std::vector<std::string> ids;
        std::vector<int> labels;
        labelled(10, 10, ids, labels);
        const auto plan = stratified_kfold(ids, labels, 5, 3);
        for (const auto& c : counts(plan, labels)) {
            CHECK(c[0] == 2);
            CHECK(c[1] == 2);
        }
        CHECK(plan == stratified_kfold(ids, labels, 5, 3));
        CHECK_FALSE(plan == stratified_kfold(ids, labels, 5, 4));
    }
    SUBCASE("remainder") {
        std::vector<std::string> ids;
        std::vector<int> labels;
        labelled(11, 10, ids, labels);
        const auto plan = stratified_kfold(ids, labels, 5, 3);
        int lo = 100, hi = 0, total_lo = 100, total_hi = 0;
        for (const auto& c : counts(plan, labels)) {
            lo = std::min(lo, c[1]);
            hi = std::max(hi, c[1]);
            total_lo = std::min(total_lo, c[0] + c[1]);
            total_hi = std::max(total_hi, c[0] + c[1]);
        }
        CHECK(lo == 2);
        CHECK(hi == 3);
        CHECK(total_hi - total_lo <= 1);
    }
    SUBCASE("partition property on random sizes") {
        for (std::uint64_t seed = 0; seed < 30; ++seed) {
            std::vector<std::string> ids;
            std::vector<int> labels;
            const std::uint32_t k = 2 + seed % 5;
            labelled(k + seed % 7, k + seed % 11, ids, labels);
            const auto plan = stratified_kfold(ids, labels, k, seed);
            REQUIRE(plan.assignments.size() == ids.size());
            for (auto a : plan.assignments) CHECK(a < k);
            for (int cls = 0; cls < 2; ++cls) {
                int lo = 1 << 30, hi = 0;
                for (const auto& c : counts(plan, labels)) {
                    lo = std::min(lo, c[cls]);
                    hi = std::max(hi, c[cls]);
                }
                CHECK(hi - lo <= 1);
            }
            CHECK(plan.fold_of(ids.back()) == plan.assignments.back());
        }
    }
    SUBCASE("errors") {
        std::vector<std::string> ids;
        std::vector<int> labels;
        labelled(3, 10, ids, labels);
        CHECK_THROWS_AS(stratified_kfold(ids, labels, 5, 0), ConfigError);
        CHECK_THROWS_AS(stratified_kfold(ids, labels, 1, 0), ConfigError);
    }
}

TEST_CASE("top-k selection") {
    CvResult cv;
    const double aurocs[] = {0.91, 0.95, 0.88, 0.95, 0.90};
    for (std::uint32_t i = 0; i < 5; ++i) cv.folds.push_back({i, "", aurocs[i], 0.0, 1, 0});
    CHECK(select_top_k(cv, 3) == std::vector<std::uint32_t>{1, 3, 0});
    CHECK(select_top_k(cv, 5) == std::vector<std::uint32_t>{1, 3, 0, 4, 2});
    CHECK(select_top_k(cv, 1) == std::vector<std::uint32_t>{1});
    CHECK_THROWS_AS(select_top_k(cv, 6), ConfigError);

    auto shifted = cv;
    for (auto& f : shifted.folds) f.val_auroc -= 0.25;
    CHECK(select_top_k(shifted, 3) == select_top_k(cv, 3));
}

TEST_CASE("ensemble prediction") {
    const auto arch = small_arch();
    const auto img = testutil::random_image(32, 32, 3);
    const auto m1 = init_params(arch, 1);
    const auto m2 = init_params(arch, 2);
    const auto m3 = init_params(arch, 3);

    CHECK(ensemble_predict(std::vector<ModelParams>{m1}, img) == predict(m1, img));
    const std::vector<ModelParams> copies{m1, m1, m1};
    CHECK(std::abs(ensemble_predict(copies, img) - predict(m1, img)) <= 1e-12);

    AugmentPolicy identity_only = AugmentPolicy::none();
    identity_only.tta_enabled = false;
    REQUIRE(tta_set(identity_only).size() == 1);
    const std::vector<ModelParams> trio{m1, m2, m3};
    CHECK(ensemble_predict(trio, img, &identity_only) == ensemble_predict(trio, img));

    const std::vector<ModelParams> reversed{m3, m2, m1};
    CHECK(std::abs(ensemble_predict(trio, img) - ensemble_predict(reversed, img)) <= 1e-12);

    AugmentPolicy tta;
    double flat = 0.0;
    for (const auto& m : trio)
        for (const auto& v : tta_set(tta)) flat += predict(m, apply_transform(img, v));
    CHECK(ensemble_predict(trio, img, &tta) == doctest::Approx(flat / 18.0).epsilon(1e-12));

    auto other = small_arch();
    other.input_size = 16;
    const std::vector<ModelParams> mixed{m1, init_params(other, 1)};
    CHECK_THROWS_AS(ensemble_predict(mixed, img), ConfigError);
    CHECK_THROWS_AS(ensemble_predict(std::span<const ModelParams>{}, img), ConfigError);
}

TEST_CASE("fine-tune bookkeeping") {
    const auto arch = small_arch();
    const auto base = init_params(arch, 9);
    const auto data = make_synthetic(SyntheticTask::ring, 8, 1, "r", small_images());
    TrainConfig cfg;
    cfg.epochs = 0;
    const auto res = fine_tune(base, arch, data, data, cfg);
    CHECK(res.best == base);
    REQUIRE(res.base_hash.has_value());
    CHECK(*res.base_hash == model_hash(base));

    auto plain = arch;
    plain.variant = Variant::plain;
    CHECK_THROWS_AS(fine_tune(base, plain, data, data, cfg), ConfigError);

    cfg.epochs = 1;
    cfg.batch_size = 4;
    const auto one = fine_tune(base, arch, data, data, cfg);
    CHECK(*one.base_hash == model_hash(base));
    CHECK(one.epochs_run() == 1);
}

TEST_CASE("blob weights transfer to the ring task") {
    const auto arch = small_arch();
    const auto opts = small_images();
    TrainConfig cfg;
    cfg.lr0 = 1e-3;
    cfg.batch_size = 8;
    cfg.seed = 3;

    auto blob_cfg = cfg;
    blob_cfg.epochs = 12;
    const auto blob = train(make_synthetic(SyntheticTask::blob, 96, 1, "bt", opts),
                            make_synthetic(SyntheticTask::blob, 32, 2, "bv", opts), arch, blob_cfg);

    const auto ring_train = make_synthetic(SyntheticTask::ring, 96, 3, "rt", opts);
    const auto ring_val = make_synthetic(SyntheticTask::ring, 32, 4, "rv", opts);
    auto ring_cfg = cfg;
    ring_cfg.epochs = 1;
    const auto warm = fine_tune(blob.best, arch, ring_train, ring_val, ring_cfg);
    const auto cold = train(ring_train, ring_val, arch, ring_cfg);
    INFO("fine-tuned ", warm.history[0].val_loss, " cold ", cold.history[0].val_loss);
    CHECK(warm.history[0].val_loss < cold.history[0].val_loss);
}

TEST_CASE("cross-validation end to end") {
    testutil::TempDir dir("cv");
    // Default 64 px architecture and images.
    const auto data = make_synthetic(SyntheticTask::blob, 128, 8, "cv");
    const ArchDescriptor arch;
    TrainConfig cfg;
    cfg.epochs = 25;
    cfg.lr0 = 1e-3;
    cfg.batch_size = 8;
    cfg.seed = 4;
    CvOptions opts;
    opts.k = 2;
    opts.top_k = 1;
    opts.out_dir = dir.path() / "a";

    const auto cv = run_cv(data, arch, cfg, opts);
    REQUIRE(cv.folds.size() == 2);
    for (const auto& f : cv.folds) {
        INFO("fold ", f.fold, " auroc ", f.val_auroc);
        CHECK(f.val_auroc >= 0.9);
        CHECK(std::filesystem::exists(f.model_path));
        CHECK(load_model(f.model_path).arch == arch);
    }
    CHECK(cv.selected.size() == 1);
    const std::string json_a = read_text_file((opts.out_dir / "cv_result.json").string());
    const auto j = nlohmann::json::parse(json_a);
    CHECK(j["k"] == 2);
    CHECK(j["folds"].size() == 2);
    CHECK(j["folds"][0].contains("val_auprc"));

    opts.out_dir = dir.path() / "b";
    const auto again = run_cv(data, arch, cfg, opts);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(again.folds[i].val_auroc == cv.folds[i].val_auroc);
        CHECK(read_binary_file(again.folds[i].model_path) == read_binary_file(cv.folds[i].model_path));
    }

    opts.top_k = 3;
    CHECK_THROWS_AS(run_cv(data, arch, cfg, opts), ConfigError);
}

TEST_CASE("prepare_input and load_dataset") {
    testutil::TempDir dir("dataset");
    const auto img = testutil::random_image(40, 30, 5);
    write_ppm(dir.str("a.ppm"), img);
    write_ppm(dir.str("b.ppm"), testutil::random_image(40, 30, 6));
    write_text_file(dir.str("m.csv"), "path,label\na.ppm,1\nb.ppm,0\n");

    PreprocessConfig pre;
    pre.crop_size = 30;
    pre.resize_to = 24;
    pre.sigma = 2.0;
    const auto prepared = prepare_input(img, pre, 16);
    CHECK(prepared.width() == 16);
    CHECK(prepared == resize_bilinear(preprocess(img, pre), 16, 16));

    const auto data = load_dataset(load_manifest(dir.str("m.csv")), pre, 16);
    REQUIRE(data.size() == 2);
    CHECK(data[0].image == prepared);
    CHECK(data[0].label == 1);
    CHECK(data[1].id == "b.ppm");

    write_text_file(dir.str("bad.csv"), "path,label\nmissing.ppm,1\n");
    CHECK_THROWS_AS(load_dataset(load_manifest(dir.str("bad.csv")), pre, 16), IoError);
}
