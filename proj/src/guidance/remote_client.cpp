#include "sf/guidance/provider.h"

#include "sf/core/error.h"
#include "sf/io/image_io.h"

#include <httplib.h>
#include <json.hpp>

#include <cmath>
#include <thread>

namespace sf {

using nlohmann::ordered_json;

namespace {

std::string encode_image(const Image &img) { return io::base64_encode(io::encode_exr(img)); }

Image decode_image(const std::string &text) {
    try {
        return io::decode_exr(io::base64_decode(text));
    } catch (const Error &e) {
        fail(ErrorKind::Protocol, std::string("undecodable image payload: ") + e.what());
    }
}

void check_proto(const httplib::Result &res) {
    const std::string v = res->get_header_value(kProtocolHeader);
    if (v != std::to_string(kProtocolVersion))
        fail(ErrorKind::Protocol, "protocol version mismatch: service speaks '" + v + "', client speaks " +
                                      std::to_string(kProtocolVersion));
}

} // namespace

std::string serialize_score_request(const ScoreRequest &r) {
    r.context.validate();
    require(r.image.channels() == 3 && !r.image.empty(), "score request image must be non-empty RGB");
    ordered_json j;
    j["request_id"] = r.request_id;
    j["run_id"] = r.run_id;
    j["image"] = encode_image(r.image);
    j["mode"] = std::string(to_string(r.context.mode));
    j["prompt"] = r.context.prompt;
    j["negative_prompt"] = r.context.negative_prompt;
    j["t_min"] = r.context.t_min;
    j["t_max"] = r.context.t_max;
    j["cfg_scale"] = r.context.cfg_scale;
    j["lambda"] = r.context.lambda;
    j["injection"] = {{"enabled", r.context.injection.enabled},
                      {"s_c", r.context.injection.s_c},
                      {"p", r.context.injection.p}};
    if (r.reference_image)
        j["reference_image"] = encode_image(*r.reference_image);
    if (r.inpaint_mask)
        j["inpaint_mask"] = io::base64_encode(io::encode_png(*r.inpaint_mask));
    j["class_embedding"] = r.context.class_embedding;
    return j.dump();
}

GradientImage parse_score_response(std::string_view body, const ScoreRequest &request) {
    ordered_json j;
    try {
        j = ordered_json::parse(body);
    } catch (const std::exception &e) {
        fail(ErrorKind::Protocol, std::string("malformed score response: ") + e.what());
    }
    for (const char *key : {"request_id", "gradient", "t", "alpha_t", "w_t"})
        if (!j.contains(key))
            fail(ErrorKind::Protocol, std::string("score response lacks ") + key);
    if (j["request_id"].get<std::string>() != request.request_id)
        fail(ErrorKind::Protocol, "score response answers a different request");
    GradientImage g;
    g.gradient = decode_image(j["gradient"].get<std::string>());
    if (g.gradient.width() != request.image.width() || g.gradient.height() != request.image.height() ||
        g.gradient.channels() != 3)
        fail(ErrorKind::Protocol, "gradient shape mismatch: service returned " + std::to_string(g.gradient.width()) +
                                      "x" + std::to_string(g.gradient.height()));
    for (double v : g.gradient.data())
        if (!std::isfinite(v))
            fail(ErrorKind::Numeric, "NaN in parameters: non-finite gradient from service");
    g.t = j["t"].get<double>();
    g.alpha_t = j["alpha_t"].get<double>();
    g.w_t = j["w_t"].get<double>();
    return g;
}

RemoteScoreClient::RemoteScoreClient(std::string base_url, RemoteOptions options)
    : base_url_(std::move(base_url)), options_(options) {
    require(!base_url_.empty(), "service url is empty");
    while (!base_url_.empty() && base_url_.back() == '/')
        base_url_.pop_back();
}

std::string RemoteScoreClient::post(const std::string &path, const std::string &body) {
    std::string last_error = "no attempt made";
    auto delay = options_.backoff;
    for (int attempt = 0; attempt <= options_.retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(delay);
            delay *= 2;
        }
        httplib::Client cli(base_url_);
        cli.set_connection_timeout(options_.timeout);
        cli.set_read_timeout(options_.timeout);
        cli.set_write_timeout(options_.timeout);
        const httplib::Headers headers{{kProtocolHeader, std::to_string(kProtocolVersion)}};
        auto res = cli.Post(path, headers, body, "application/json");
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        check_proto(res);
        if (res->status != 200)
            fail(ErrorKind::Protocol, "service rejected request (HTTP " + std::to_string(res->status) + "): " + res->body);
        return res->body;
    }
    fail(ErrorKind::Unavailable, "guidance service unavailable after " + std::to_string(options_.retries + 1) +
                                     " attempts (" + last_error + ")");
}

GradientImage RemoteScoreClient::score(const ScoreRequest &request) {
    return parse_score_response(post("/v1/score", serialize_score_request(request)), request);
}

void RemoteScoreClient::lora_step(const std::string &request_id) {
    ordered_json j;
    j["request_id"] = request_id;
    post("/v1/lora-step", j.dump());
}

bool RemoteScoreClient::healthy() {
    httplib::Client cli(base_url_);
    cli.set_connection_timeout(options_.timeout);
    cli.set_read_timeout(options_.timeout);
    auto res = cli.Get("/v1/health", {{kProtocolHeader, std::to_string(kProtocolVersion)}});
    if (!res || res->status != 200)
        return false;
    check_proto(res);
    return true;
}

} // namespace sf
