#pragma once

#include "sf/core/image.h"
#include "sf/guidance/score.h"

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>

namespace sf {

inline constexpr int kProtocolVersion = 1;
inline constexpr const char *kProtocolHeader = "x-sf-proto";

struct ScoreRequest {
    std::string request_id;
    std::string run_id;
    Image image; // H x W x 3, linear RGB
    GuidanceContext context;
    std::optional<Image> reference_image; // linear RGB
    std::optional<Image> inpaint_mask;    // H x W x 1 in [0, 1]
};

class ScoreProvider {
public:
    virtual ~ScoreProvider() = default;
    virtual GradientImage score(const ScoreRequest &request) = 0;
    // One update of the provider's adapted network on its buffered batch.
    virtual void lora_step(const std::string &request_id) = 0;
};

// Request body with keys in schema order; images are base64 ZIP EXR, the mask
// base64 PNG.
std::string serialize_score_request(const ScoreRequest &request);
// Validates id echo and gradient shape against the request.
GradientImage parse_score_response(std::string_view body, const ScoreRequest &request);

struct RemoteOptions {
    int retries = 3;                                 // attempts after the first
    std::chrono::milliseconds backoff{250};          // doubled per retry
    std::chrono::seconds timeout{120};
};

// HTTP client for POST /v1/score, POST /v1/lora-step and GET /v1/health.
// Transport failures and 5xx responses are retried; the protocol header must
// match on every response.
class RemoteScoreClient : public ScoreProvider {
public:
    explicit RemoteScoreClient(std::string base_url, RemoteOptions options = {});

    GradientImage score(const ScoreRequest &request) override;
    void lora_step(const std::string &request_id) override;
    bool healthy();

    const std::string &base_url() const { return base_url_; }

private:
    std::string post(const std::string &path, const std::string &body);

    std::string base_url_;
    RemoteOptions options_;
};

} // namespace sf
