#include "neurotrack/server.hpp"

#include <chrono>
#include <deque>
#include <regex>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast.hpp>

namespace neurotrack::service {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

using Clock = std::chrono::steady_clock;

class StreamSession : public std::enable_shared_from_this<StreamSession> {
public:
    StreamSession(tcp::socket&& socket, std::shared_ptr<Session> session, std::unique_ptr<InteractiveLoop> loop,
                  double step_seconds, double time_scale)
        : ws_(std::move(socket)),
          step_timer_(ws_.get_executor()),
          drip_timer_(ws_.get_executor()),
          session_(std::move(session)),
          loop_(std::move(loop)),
          step_wall_(std::chrono::duration_cast<Clock::duration>(
              std::chrono::duration<double>(step_seconds * time_scale))),
          time_scale_(time_scale),
          origin_(Clock::now()) {}

    void run(http::request<http::string_body> req) {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.async_accept(req, beast::bind_front_handler(&StreamSession::on_accept, shared_from_this()));
    }

private:
    double now() const { return std::chrono::duration<double>(Clock::now() - origin_).count() / time_scale_; }

    void on_accept(beast::error_code ec) {
        if (ec) return close();
        send(loop_->snapshot().dump());
        read();
        schedule_step(Clock::now() + step_wall_);
    }

    void read() {
        ws_.async_read(buffer_, beast::bind_front_handler(&StreamSession::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, std::size_t) {
        if (ec) return close();
        const std::string text = beast::buffers_to_string(buffer_.data());
        buffer_.consume(buffer_.size());
        for (const auto& reply : loop_->on_message(text, now())) send(reply.dump());
        read();
    }

    void schedule_step(Clock::time_point at) {
        step_timer_.expires_at(at);
        step_timer_.async_wait([self = shared_from_this(), at](beast::error_code ec) {
            if (ec || self->closed_) return;
            const auto messages = self->loop_->step(self->now());
            // frames are spread over the following step so the client sees the frame cadence
            const auto n = static_cast<long>(messages.size());
            for (long i = 0; i < n; ++i) {
                self->pending_.emplace_back(at + self->step_wall_ * i / std::max(1L, n), messages[i].dump());
            }
            self->drip();
            self->schedule_step(at + self->step_wall_);
        });
    }

    void drip() {
        while (!pending_.empty() && pending_.front().first <= Clock::now()) {
            send(std::move(pending_.front().second));
            pending_.pop_front();
        }
        if (pending_.empty() || dripping_) return;
        dripping_ = true;
        drip_timer_.expires_at(pending_.front().first);
        drip_timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
            self->dripping_ = false;
            if (!ec && !self->closed_) self->drip();
        });
    }

    void send(std::string text) {
        outbox_.push_back(std::move(text));
        if (outbox_.size() == 1) write();
    }

    void write() {
        ws_.text(true);
        ws_.async_write(asio::buffer(outbox_.front()),
                        [self = shared_from_this()](beast::error_code ec, std::size_t) {
                            if (ec) return self->close();
                            self->outbox_.pop_front();
                            if (!self->outbox_.empty()) self->write();
                        });
    }

    void close() {
        if (closed_) return;
        closed_ = true;
        step_timer_.cancel();
        drip_timer_.cancel();
        session_->record_painting(loop_->painting());
        session_->set_interactive_phase(Phase::idle);
    }

    websocket::stream<beast::tcp_stream> ws_;
    asio::steady_timer step_timer_;
    asio::steady_timer drip_timer_;
    beast::flat_buffer buffer_;
    std::shared_ptr<Session> session_;
    std::unique_ptr<InteractiveLoop> loop_;
    Clock::duration step_wall_;
    double time_scale_;
    Clock::time_point origin_;
    std::deque<std::pair<Clock::time_point, std::string>> pending_;
    std::deque<std::string> outbox_;
    bool dripping_ = false;
    bool closed_ = false;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
public:
    HttpSession(tcp::socket&& socket, SessionManager& sessions, ApiHandler& api, double time_scale)
        : stream_(std::move(socket)), sessions_(sessions), api_(api), time_scale_(time_scale) {}

    void run() {
        asio::dispatch(stream_.get_executor(), beast::bind_front_handler(&HttpSession::read, shared_from_this()));
    }

private:
    void read() {
        req_ = {};
        stream_.expires_after(std::chrono::seconds(60));
        http::async_read(stream_, buffer_, req_, beast::bind_front_handler(&HttpSession::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, std::size_t) {
        if (ec) {
            stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
            return;
        }
        if (websocket::is_upgrade(req_)) return upgrade();

        const std::string method(req_.method_string());
        const std::string target(req_.target());
        const Response r = api_.handle(method, target, req_.body());
        reply(r.status, r.body, r.content_type);
    }

    void upgrade() {
        static const std::regex kStream(R"(^/sessions/([A-Za-z0-9_-]+)/stream$)");
        const std::string target(req_.target());
        std::smatch m;
        const std::string path = target.substr(0, target.find('?'));
        if (!std::regex_match(path, m, kStream)) {
            return reply(404, R"({"error": "websocket route not found"})", "application/json");
        }
        try {
            auto session = sessions_.find(m[1].str());
            auto loop = session->open_stream();
            const double step = session->config().step_seconds;
            stream_.expires_never();
            std::make_shared<StreamSession>(stream_.release_socket(), session, std::move(loop), step, time_scale_)
                ->run(std::move(req_));
        } catch (const HttpError& e) {
            reply(e.status(), nlohmann::json{{"error", e.what()}}.dump(), "application/json");
        }
    }

    void reply(int status, const std::string& body, const std::string& content_type) {
        auto res = std::make_shared<http::response<http::string_body>>(static_cast<http::status>(status),
                                                                         req_.version());
        res->set(http::field::server, "neurotrack");
        res->set(http::field::content_type, content_type);
        res->set(http::field::access_control_allow_origin, "*");
        res->keep_alive(req_.keep_alive());
        res->body() = body;
        res->prepare_payload();
        http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
            if (ec) return;
            if (!res->keep_alive()) {
                self->stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
                return;
            }
            self->read();
        });
    }

    beast::tcp_stream stream_;
    beast::flat_buffer buffer_;
    http::request<http::string_body> req_;
    SessionManager& sessions_;
    ApiHandler& api_;
    double time_scale_;
};

}  // namespace

struct Server::Impl {
    Impl(ServerOptions o, SessionManager& s)
        : options(std::move(o)), sessions(s), api(s), ioc(std::max(1, options.threads)), acceptor(ioc) {}

    void accept() {
        acceptor.async_accept(asio::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
            if (ec) {
                if (ec == asio::error::operation_aborted) return;
            } else {
                std::make_shared<HttpSession>(std::move(socket), sessions, api, options.time_scale)->run();
            }
            accept();
        });
    }

    ServerOptions options;
    SessionManager& sessions;
    ApiHandler api;
    asio::io_context ioc;
    tcp::acceptor acceptor;
    std::vector<std::thread> threads;
    std::mutex mu;
    std::condition_variable cv;
    bool stopped = false;
};

Server::Server(ServerOptions options, SessionManager& sessions)
    : impl_(std::make_unique<Impl>(std::move(options), sessions)) {
    if (!(impl_->options.time_scale > 0.0)) throw InvalidArgument("server: time scale must be positive");
}

Server::~Server() {
    stop();
    for (auto& t : impl_->threads) {
        if (t.joinable()) t.join();
    }
}

unsigned short Server::start() {
    auto& i = *impl_;
    const tcp::endpoint endpoint(asio::ip::make_address(i.options.address), i.options.port);
    i.acceptor.open(endpoint.protocol());
    i.acceptor.set_option(asio::socket_base::reuse_address(true));
    i.acceptor.bind(endpoint);
    i.acceptor.listen(asio::socket_base::max_listen_connections);
    i.accept();
    for (int t = 0; t < std::max(1, i.options.threads); ++t) i.threads.emplace_back([&i] { i.ioc.run(); });
    return i.acceptor.local_endpoint().port();
}

void Server::stop() {
    auto& i = *impl_;
    {
        std::lock_guard lock(i.mu);
        if (i.stopped) return;
        i.stopped = true;
    }
    i.ioc.stop();
    i.cv.notify_all();
}

void Server::wait() {
    auto& i = *impl_;
    std::unique_lock lock(i.mu);
    i.cv.wait(lock, [&i] { return i.stopped; });
}

}  // namespace neurotrack::service
