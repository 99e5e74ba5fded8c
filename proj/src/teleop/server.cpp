// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#include <gskit/teleop/server.hpp>

#include <gskit/core/error.hpp>
#include <gskit/core/log.hpp>

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/steady_timer.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <json.hpp>

#include <condition_variable>
#include <deque>
#include <future>
#include <thread>

namespace gskit {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;
using nlohmann::json;

namespace {

std::string
errorBody(const std::string &code, const std::string &message) {
    return json{{"error", {{"code", code}, {"message", message}}}}.dump();
}

std::vector<std::string>
splitPath(const std::string &target) {
    std::string path = target.substr(0, target.find('?'));
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (start <= path.size()) {
        const std::size_t end = path.find('/', start);
        const std::string part = path.substr(start, end == std::string::npos ? std::string::npos : end - start);
        if (!part.empty()) parts.push_back(part);
        if (end == std::string::npos) break;
        start = end + 1;
    }
    return parts;
}

// ---- websocket connection ----------------------------------------------------------------

class WsConnection : public std::enable_shared_from_this<WsConnection> {
  public:
    WsConnection(tcp::socket &&socket, TeleopService &service, std::shared_ptr<TeleopSession> session,
                 const ServerOptions &options)
        : mWs(std::move(socket)), mService(service), mSession(std::move(session)), mOptions(options),
          mTimer(mWs.get_executor()) {}

    ~WsConnection() {
        if (mToken) mSession->unsubscribe(*mToken);
    }

    void run(http::request<http::string_body> request) {
        mWs.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        mWs.async_accept(request, beast::bind_front_handler(&WsConnection::onAccept, shared_from_this()));
    }

  private:
    struct Outgoing {
        std::shared_ptr<const std::string> text;
        std::shared_ptr<const std::vector<std::uint8_t>> binary;
        std::string camera;
    };

    void onAccept(beast::error_code ec) {
        if (ec) return;
        std::weak_ptr<WsConnection> weak = shared_from_this();
        mToken = mSession->subscribe([weak](const std::vector<FrameMessage> &frames) {
            auto self = weak.lock();
            if (!self) return;
            // Encode on the publishing thread, deliver in publication order on our strand.
            std::vector<std::pair<std::string, std::shared_ptr<const std::vector<std::uint8_t>>>> encoded;
            for (const auto &f : frames) {
                encoded.emplace_back(f.camera, std::make_shared<const std::vector<std::uint8_t>>(encodeFrame(f)));
            }
            std::vector<std::uint64_t> steps;
            for (const auto &f : frames) steps.push_back(f.stepIndex);
            net::post(self->mWs.get_executor(), [self, encoded = std::move(encoded), steps = std::move(steps)] {
                for (std::size_t i = 0; i < encoded.size(); ++i) {
                    self->mLastFrames[encoded[i].first] = {steps[i], encoded[i].second};
                    self->enqueueFrame(encoded[i].first, steps[i], encoded[i].second);
                }
            });
        });
        mController = mSession->claimControl(*mToken);
        sendText(json{{"type", "hello"},
                      {"session", mSession->id()},
                      {"role", mController ? "control" : "view"},
                      {"step_index", mSession->stepIndex()}}
                     .dump());
        armHeartbeat();
        doRead();
    }

    void armHeartbeat() {
        const auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
            std::chrono::duration<double>(1.0 / mOptions.heartbeatHz));
        mTimer.expires_after(period);
        mTimer.async_wait([self = shared_from_this()](beast::error_code ec) {
            if (ec || self->mClosed) return;
            try {
                self->mService.find(self->mSession->id());
            } catch (const TeleopError &e) {
                self->closeWith(e.code());
                return;
            }
            if (!self->mSentSinceTick) {
                for (const auto &[camera, frame] : self->mLastFrames) self->enqueueFrame(camera, frame.first, frame.second);
            }
            self->mSentSinceTick = false;
            self->armHeartbeat();
        });
    }

    void doRead() {
        mWs.async_read(mReadBuffer, beast::bind_front_handler(&WsConnection::onRead, shared_from_this()));
    }

    void onRead(beast::error_code ec, std::size_t) {
        if (ec) {
            shutdown();
            return;
        }
        const bool isText = mWs.got_text();
        const std::string message = beast::buffers_to_string(mReadBuffer.data());
        mReadBuffer.consume(mReadBuffer.size());
        if (!isText) {
            sendError("malformed_command", "commands are JSON text messages");
        } else if (!mController) {
            sendError("view_only", "another connection controls this session");
        } else {
            try {
                const CommandAck ack = mService.apply(mSession->id(), parseCommand(message));
                // Post so the acknowledgement follows the frames the command produced.
                net::post(mWs.get_executor(), [self = shared_from_this(), text = ack.toJson()] { self->sendText(text); });
            } catch (const TeleopError &e) {
                sendError(e.code(), e.what());
            } catch (const Error &e) {
                sendError("command_failed", e.what());
            }
        }
        doRead();
    }

    void sendError(const std::string &code, const std::string &message) {
        sendText(json{{"type", "error"}, {"ok", false}, {"code", code}, {"message", message}}.dump());
    }

    void sendText(std::string text) {
        mQueue.push_back({std::make_shared<const std::string>(std::move(text)), nullptr, {}});
        if (!mWriting) doWrite();
    }

    void enqueueFrame(const std::string &camera, std::uint64_t step,
                      const std::shared_ptr<const std::vector<std::uint8_t>> &bytes) {
        if (mClosed) return;
        auto &last = mLastQueuedStep[camera];
        if (mAnyQueued[camera] && step < last) return; // never reorder
        last = step;
        mAnyQueued[camera] = true;
        mSentSinceTick = true;
        // Drop the oldest waiting frame of this camera once the per-camera budget is used.
        std::size_t waiting = 0;
        const std::size_t first = mWriting ? 1 : 0;
        for (std::size_t i = first; i < mQueue.size(); ++i) waiting += mQueue[i].binary && mQueue[i].camera == camera;
        if (waiting >= mOptions.maxQueuedFramesPerCamera) {
            for (std::size_t i = first; i < mQueue.size(); ++i) {
                if (mQueue[i].binary && mQueue[i].camera == camera) {
                    mQueue.erase(mQueue.begin() + static_cast<std::ptrdiff_t>(i));
                    break;
                }
            }
        }
        mQueue.push_back({nullptr, bytes, camera});
        if (!mWriting) doWrite();
    }

    void doWrite() {
        if (mQueue.empty() || mClosed) {
            mWriting = false;
            return;
        }
        mWriting = true;
        const Outgoing &out = mQueue.front();
        if (out.binary) {
            mWs.binary(true);
            mWs.async_write(net::buffer(*out.binary),
                            beast::bind_front_handler(&WsConnection::onWrite, shared_from_this()));
        } else {
            mWs.text(true);
            mWs.async_write(net::buffer(*out.text), beast::bind_front_handler(&WsConnection::onWrite, shared_from_this()));
        }
    }

    void onWrite(beast::error_code ec, std::size_t) {
        if (ec) {
            shutdown();
            return;
        }
        mQueue.pop_front();
        doWrite();
    }

    void closeWith(const std::string &reason) {
        if (mClosed) return;
        mClosed = true;
        mTimer.cancel();
        mWs.async_close(websocket::close_reason(websocket::close_code::going_away, reason),
                        [self = shared_from_this()](beast::error_code) {});
    }

    void shutdown() {
        if (mClosed) return;
        mClosed = true;
        mTimer.cancel();
        if (mToken) {
            mSession->releaseControl(*mToken);
            mSession->unsubscribe(*mToken);
            mToken.reset();
        }
    }

    websocket::stream<beast::tcp_stream> mWs;
    TeleopService &mService;
    std::shared_ptr<TeleopSession> mSession;
    const ServerOptions &mOptions;
    net::steady_timer mTimer;
    beast::flat_buffer mReadBuffer;

    std::optional<int> mToken;
    bool mController = false;
    bool mClosed = false;
    bool mWriting = false;
    bool mSentSinceTick = false;
    std::deque<Outgoing> mQueue;
    std::map<std::string, std::pair<std::uint64_t, std::shared_ptr<const std::vector<std::uint8_t>>>> mLastFrames;
    std::map<std::string, std::uint64_t> mLastQueuedStep;
    std::map<std::string, bool> mAnyQueued;
};

// ---- http connection ---------------------------------------------------------------------

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
  public:
    HttpConnection(tcp::socket &&socket, TeleopService &service, const ServerOptions &options)
        : mStream(std::move(socket)), mService(service), mOptions(options) {}

    void run() {
        net::dispatch(mStream.get_executor(), beast::bind_front_handler(&HttpConnection::doRead, shared_from_this()));
    }

  private:
    void doRead() {
        mRequest = {};
        mStream.expires_after(std::chrono::seconds(30));
        http::async_read(mStream, mBuffer, mRequest,
                         beast::bind_front_handler(&HttpConnection::onRead, shared_from_this()));
    }

    void onRead(beast::error_code ec, std::size_t) {
        if (ec == http::error::end_of_stream) {
            beast::error_code ignored;
            mStream.socket().shutdown(tcp::socket::shutdown_send, ignored);
            return;
        }
        if (ec) return;

        if (websocket::is_upgrade(mRequest)) {
            const auto parts = splitPath(std::string(mRequest.target()));
            if (parts.size() == 3 && parts[0] == "sessions" && parts[2] == "stream") {
                try {
                    auto session = mService.find(parts[1]);
                    mStream.expires_never();
                    std::make_shared<WsConnection>(mStream.release_socket(), mService, std::move(session), mOptions)
                        ->run(std::move(mRequest));
                    return;
                } catch (const TeleopError &e) {
                    respond(e.httpStatus(), errorBody(e.code(), e.what()));
                    return;
                }
            }
            respond(404, errorBody("not_found", "no stream at " + std::string(mRequest.target())));
            return;
        }
        route();
    }

    void route() {
        const auto parts = splitPath(std::string(mRequest.target()));
        const auto method = mRequest.method();
        try {
            if (method == http::verb::options) {
                respond(204, "");
            } else if (parts.size() == 1 && parts[0] == "scenes" && method == http::verb::get) {
                respond(200, json{{"scenes", mService.scenes().names()}}.dump());
            } else if (parts.size() == 1 && parts[0] == "tasks" && method == http::verb::get) {
                respond(200, json{{"tasks", taskNames()}}.dump());
            } else if (parts.size() == 1 && parts[0] == "sessions" && method == http::verb::post) {
                respond(201, mService.create(parseCreate(mRequest.body()))->describe());
            } else if (parts.size() == 2 && parts[0] == "sessions" && method == http::verb::get) {
                respond(200, mService.find(parts[1])->describe());
            } else if (parts.size() == 2 && parts[0] == "sessions" && method == http::verb::delete_) {
                if (!mService.remove(parts[1])) throw TeleopError("not_found", "no session " + parts[1], 404);
                respond(200, json{{"deleted", parts[1]}}.dump());
            } else if (parts.size() == 3 && parts[0] == "sessions" && parts[2] == "datasets" &&
                       method == http::verb::get) {
                const auto session = mService.find(parts[1]);
                const auto saved = session->savedTrajectories();
                respond(200, json{{"session", session->id()},
                                  {"dir", saved.empty() ? std::string() : session->datasetDir().string()},
                                  {"trajectories", saved}}
                                 .dump());
            } else if (!parts.empty() && (parts[0] == "scenes" || parts[0] == "tasks" || parts[0] == "sessions")) {
                respond(405, errorBody("method_not_allowed", "method not allowed on " + std::string(mRequest.target())));
            } else {
                respond(404, errorBody("not_found", "no route for " + std::string(mRequest.target())));
            }
        } catch (const TeleopError &e) {
            respond(e.httpStatus(), errorBody(e.code(), e.what()));
        } catch (const std::exception &e) {
            respond(500, errorBody("internal", e.what()));
        }
    }

    static CreateSessionRequest parseCreate(const std::string &body) {
        json j;
        try {
            j = json::parse(body);
        } catch (const json::exception &) {
            throw TeleopError("bad_request", "request body is not valid JSON");
        }
        if (!j.is_object()) throw TeleopError("bad_request", "request body must be a JSON object");
        CreateSessionRequest r;
        try {
            r.scene = j.at("scene").get<std::string>();
            r.task = j.at("task").get<std::string>();
            if (j.contains("seed")) r.seed = j.at("seed").get<std::uint64_t>();
            if (j.contains("cameras")) r.cameras = j.at("cameras").get<std::vector<std::string>>();
        } catch (const json::exception &e) {
            throw TeleopError("bad_request", std::string("bad session request: ") + e.what());
        }
        return r;
    }

    void respond(int status, std::string body) {
        auto res = std::make_shared<http::response<http::string_body>>(static_cast<http::status>(status),
                                                                       mRequest.version());
        res->set(http::field::server, "gskit-teleop");
        res->set(http::field::access_control_allow_origin, "*");
        res->set(http::field::access_control_allow_methods, "GET, POST, DELETE, OPTIONS");
        res->set(http::field::access_control_allow_headers, "Content-Type");
        if (!body.empty()) res->set(http::field::content_type, "application/json");
        res->keep_alive(mRequest.keep_alive());
        res->body() = std::move(body);
        res->prepare_payload();
        http::async_write(mStream, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
            if (ec) return;
            if (!res->keep_alive()) {
                beast::error_code ignored;
                self->mStream.socket().shutdown(tcp::socket::shutdown_send, ignored);
                return;
            }
            self->doRead();
        });
    }

    beast::tcp_stream mStream;
    beast::flat_buffer mBuffer;
    http::request<http::string_body> mRequest;
    TeleopService &mService;
    const ServerOptions &mOptions;
};

} // namespace

// ---- server ------------------------------------------------------------------------------

struct TeleopServer::Impl {
    Impl(TeleopService &service, ServerOptions options)
        : service(service), options(std::move(options)), strand(net::make_strand(ioc)), acceptor(strand), reaper(strand) {}

    void doAccept() {
        acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
            if (ec) {
                if (ec != net::error::operation_aborted) logWarning("teleop accept failed: " + ec.message());
                if (!acceptor.is_open()) return;
            } else {
                std::make_shared<HttpConnection>(std::move(socket), service, options)->run();
            }
            doAccept();
        });
    }

    void armReaper() {
        reaper.expires_after(std::chrono::seconds(5));
        reaper.async_wait([this](beast::error_code ec) {
            if (ec) return;
            service.reap();
            armReaper();
        });
    }

    TeleopService &service;
    ServerOptions options;
    net::io_context ioc;
    // The acceptor and the reaper share one strand so shutdown can close them without racing
    // their completion handlers.
    net::strand<net::io_context::executor_type> strand;
    tcp::acceptor acceptor;
    net::steady_timer reaper;
    std::vector<std::thread> workers;
    unsigned short port = 0;
    bool running = false;
    std::mutex mutex;
    std::condition_variable stopped;
};

TeleopServer::TeleopServer(TeleopService &service, ServerOptions options)
    : mImpl(std::make_unique<Impl>(service, std::move(options))) {}

TeleopServer::~TeleopServer() { stop(); }

unsigned short
TeleopServer::start() {
    Impl &m = *mImpl;
    if (m.running) return m.port;
    beast::error_code ec;
    const auto address = net::ip::make_address(m.options.address, ec);
    if (ec) throw TeleopError("bad_config", "bad listen address '" + m.options.address + "'", 500);
    const tcp::endpoint endpoint(address, m.options.port);
    m.acceptor.open(endpoint.protocol(), ec);
    if (!ec) m.acceptor.set_option(net::socket_base::reuse_address(true), ec);
    if (!ec) m.acceptor.bind(endpoint, ec);
    if (!ec) m.acceptor.listen(net::socket_base::max_listen_connections, ec);
    if (ec) {
        throw TeleopError("bind_failed", "cannot listen on " + m.options.address + ":" + std::to_string(m.options.port) +
                                             ": " + ec.message(),
                          500);
    }
    m.port = m.acceptor.local_endpoint().port();
    m.doAccept();
    m.armReaper();
    m.running = true;
    for (int i = 0; i < std::max(1, m.options.threads); ++i) m.workers.emplace_back([&m] { m.ioc.run(); });
    logInfo("teleop server listening on " + m.options.address + ":" + std::to_string(m.port));
    return m.port;
}

void
TeleopServer::stop() {
    Impl &m = *mImpl;
    {
        std::lock_guard<std::mutex> lock(m.mutex);
        if (!m.running) return;
        m.running = false;
    }
    std::promise<void> closed;
    net::post(m.strand, [&m, &closed] {
        beast::error_code ignored;
        m.acceptor.close(ignored);
        m.reaper.cancel();
        closed.set_value();
    });
    closed.get_future().wait();
    m.ioc.stop();
    for (auto &t : m.workers) {
        if (t.joinable()) t.join();
    }
    m.workers.clear();
    m.stopped.notify_all();
}

void
TeleopServer::wait() {
    Impl &m = *mImpl;
    std::unique_lock<std::mutex> lock(m.mutex);
    m.stopped.wait(lock, [&m] { return !m.running; });
}

unsigned short
TeleopServer::port() const {
    return mImpl->port;
}

} // namespace gskit
