#include <catch2/catch_amalgamated.hpp>

#include "decu/checkpoint.hpp"
#include "test_rigs.hpp"

using namespace decu;
using namespace decu::testing;

namespace {

struct CkptRig {
    BinnedDataset ds;
    EnsembleSpec spec;
    EnsembleModel model;
    std::vector<std::uint64_t> hashes;

    CkptRig()
        : ds(make_binned_dataset(tiny_dataset_config(), 61)),
          spec(tiny_spec(3, 0, 0)),
          model(untrained_model(ds, spec, 71)) {
        for (const auto& a : model.subset_assignment) hashes.push_back(subset_hash(a));
    }
};

} // namespace

TEST_CASE_METHOD(CkptRig, "checkpoint round-trips bit-exactly") {
    const auto bytes = serialize_ensemble(model, 0xDEADBEEFCAFEF00DULL, hashes);
    CHECK(bytes.substr(0, 5) == "DECU1");

    const auto loaded = deserialize_ensemble(bytes);
    CHECK(loaded.config_hash == 0xDEADBEEFCAFEF00DULL);
    CHECK(loaded.subset_hashes == hashes);
    CHECK(loaded.model.component_seeds == model.component_seeds);
    CHECK(loaded.model.backbone.w1 == model.backbone.w1);
    CHECK(loaded.model.backbone.b3 == model.backbone.b3);
    CHECK(backbone_hash(loaded.model.backbone) == backbone_hash(model.backbone));
    REQUIRE(loaded.model.num_components() == 3);
    for (int j = 0; j < 3; ++j) CHECK(loaded.model.tables[j].rows == model.tables[j].rows);
    CHECK(loaded.model.sched.T == model.sched.T);
    CHECK(loaded.model.sched.betas == model.sched.betas);
    CHECK(loaded.model.ddim_steps == model.ddim_steps);
    CHECK(loaded.model.codec.kind == model.codec.kind);
    CHECK(loaded.model.codec.image_size == model.codec.image_size);
    CHECK(loaded.model.weights == std::vector<double>(3, 1.0 / 3.0));

    // Serialize -> deserialize -> serialize is the identity on bytes.
    const auto again = serialize_ensemble(loaded.model, loaded.config_hash,
                                          loaded.subset_hashes);
    CHECK(again == bytes);
}

TEST_CASE_METHOD(CkptRig, "checkpoint file round-trip") {
    const auto path = std::filesystem::temp_directory_path() / "decu_ckpt_test.decu";
    save_ensemble(model, 123, hashes, path);
    const auto loaded = load_ensemble(path);
    CHECK(loaded.config_hash == 123);
    CHECK(loaded.model.backbone.w2 == model.backbone.w2);
    std::filesystem::remove(path);
}

TEST_CASE_METHOD(CkptRig, "corrupt checkpoints are rejected") {
    auto bytes = serialize_ensemble(model, 1, hashes);

    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(deserialize_ensemble(bad_magic), CheckpointError);

    CHECK_THROWS_AS(deserialize_ensemble(bytes.substr(0, bytes.size() / 2)), CheckpointError);
    CHECK_THROWS_AS(deserialize_ensemble(bytes + "junk"), CheckpointError);
    CHECK_THROWS_AS(deserialize_ensemble(""), CheckpointError);
}
