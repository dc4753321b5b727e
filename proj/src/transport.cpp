#include "httplib.h"
#include "wardlab/agents.hpp"

namespace wardlab::agents {

HttpTransport default_transport() {
  return [](const HttpRequest& request) -> HttpResponse {
    httplib::Client client(request.url);
    client.set_connection_timeout(10, 0);
    client.set_read_timeout(120, 0);
    httplib::Headers headers;
    if (!request.auth_bearer.empty()) {
      headers.emplace("Authorization", "Bearer " + request.auth_bearer);
    }
    auto result = client.Post(request.path, headers, request.body, "application/json");
    HttpResponse response;
    if (!result) {
      response.error = httplib::to_string(result.error());
      return response;
    }
    response.status = result->status;
    response.body = result->body;
    return response;
  };
}

}  // namespace wardlab::agents
