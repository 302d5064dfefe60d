#include "sigcorr/model_io.hpp"
#include "sigcorr/reference.hpp"

#include <doctest.h>

#include <cstdio>
#include <fstream>

using namespace sigcorr;
using nlohmann::json;

TEST_CASE("model round-trips through JSON") {
    SystemModel model = make_qubit_model(QubitExampleParams{});
    model.decay_channels.push_back(Matrix::Identity(2, 2) * 0.3);
    SystemModel back = model_from_json(model_to_json(model));
    CHECK(back.dim == model.dim);
    CHECK((back.hamiltonian - model.hamiltonian).norm() == 0.0);
    REQUIRE(back.channels.size() == model.channels.size());
    for (std::size_t k = 0; k < model.channels.size(); ++k) {
        CHECK(back.channels[k].label == model.channels[k].label);
        CHECK(back.channels[k].eta == model.channels[k].eta);
        CHECK((back.channels[k].c - model.channels[k].c).norm() == 0.0);
    }
    REQUIRE(back.decay_channels.size() == 1);
    CHECK((back.decay_channels[0] - model.decay_channels[0]).norm() == 0.0);
}

TEST_CASE("matrix serialization uses [re, im] pairs") {
    Matrix m(1, 1);
    m(0, 0) = Complex(2.0, -3.0);
    json j = matrix_to_json(m);
    CHECK(j[0][0][0].get<double>() == 2.0);
    CHECK(j[0][0][1].get<double>() == -3.0);
    Matrix back = matrix_from_json(j, "m");
    CHECK(back(0, 0) == Complex(2.0, -3.0));
}

TEST_CASE("unknown keys are rejected") {
    json j = model_to_json(make_qubit_model(QubitExampleParams{}));
    j["surprise"] = 1;
    CHECK_THROWS_AS(model_from_json(j), ConfigError);

    json j2 = model_to_json(make_qubit_model(QubitExampleParams{}));
    j2["channels"][0]["typo"] = true;
    CHECK_THROWS_AS(model_from_json(j2), ConfigError);
}

TEST_CASE("invalid efficiency is rejected at load time") {
    json j = model_to_json(make_qubit_model(QubitExampleParams{}));
    j["channels"][0]["eta"] = 1.5;
    CHECK_THROWS_AS(model_from_json(j), std::exception);
}

TEST_CASE("load_model_file reads what model_to_json wrote") {
    const std::string path = "io_roundtrip_tmp.json";
    {
        std::ofstream out(path);
        out << model_to_json(make_qubit_model(QubitExampleParams{})).dump(2);
    }
    SystemModel loaded = load_model_file(path);
    CHECK(loaded.dim == 2);
    CHECK(loaded.channels.size() == 2);
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_model_file("no_such_file.json"), std::exception);
}

TEST_CASE("model hash is stable and sensitive to parameter changes") {
    SystemModel a = make_qubit_model(QubitExampleParams{});
    SystemModel b = make_qubit_model(QubitExampleParams{});
    CHECK(model_hash(a) == model_hash(b));
    CHECK(model_hash(a).size() == 16);

    QubitExampleParams p;
    p.gamma_x = 0.6;
    CHECK(model_hash(make_qubit_model(p)) != model_hash(a));
}
