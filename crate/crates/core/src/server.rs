//! Serving side of the line protocol, over stdio or HTTP.

use std::io::{BufRead, Write};
use std::net::SocketAddr;

use crate::error::{Error, Result};
use crate::protocol::{self, Request, Response};

/// Answers protocol requests.
pub trait Handler: Send + Sync {
    fn handle(&self, request: Request) -> Response;
}

/// Decode one raw line and produce the response line (without newline).
pub fn respond(handler: &dyn Handler, line: &str) -> String {
    let resp = match protocol::decode_request(line) {
        Ok(req) => handler.handle(req),
        Err(e) => Response::Error {
            message: e.to_string(),
        },
    };
    protocol::encode(&resp)
}

/// Serve requests read line by line until end of input. Blank lines are
/// ignored.
pub fn serve_lines<R: BufRead, W: Write>(handler: &dyn Handler, input: R, mut output: W) -> Result<()> {
    for line in input.lines() {
        let line = line.map_err(|e| Error::io("<stdin>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let out = respond(handler, &line);
        writeln!(output, "{out}")
            .and_then(|_| output.flush())
            .map_err(|e| Error::io("<stdout>", e))?;
    }
    Ok(())
}

/// A bound HTTP endpoint accepting `POST /generate` and `POST /score`.
pub struct HttpServer {
    inner: tiny_http::Server,
}

impl HttpServer {
    pub fn bind(addr: &str) -> Result<Self> {
        let inner = tiny_http::Server::http(addr)
            .map_err(|e| Error::transport(format!("cannot listen on {addr}: {e}"), ""))?;
        Ok(Self { inner })
    }

    pub fn local_addr(&self) -> Option<SocketAddr> {
        self.inner.server_addr().to_ip()
    }

    /// Serve forever (until the listener fails).
    pub fn run(&self, handler: &dyn Handler) {
        for mut req in self.inner.incoming_requests() {
            let path = req.url().split('?').next().unwrap_or("").to_owned();
            let (status, body) = if *req.method() != tiny_http::Method::Post {
                (405, protocol::encode(&Response::Error {
                    message: "only POST is supported".into(),
                }))
            } else if path != "/generate" && path != "/score" {
                (404, protocol::encode(&Response::Error {
                    message: format!("no endpoint at {path}"),
                }))
            } else {
                let mut body = String::new();
                match req.as_reader().read_to_string(&mut body) {
                    Ok(_) => {
                        let out = respond(handler, &body);
                        let is_error = out.starts_with("{\"type\":\"error\"");
                        (if is_error { 400 } else { 200 }, out)
                    }
                    Err(e) => (400, protocol::encode(&Response::Error {
                        message: e.to_string(),
                    })),
                }
            };
            let header = tiny_http::Header::from_bytes("content-type", "application/json")
                .expect("static header");
            let response = tiny_http::Response::from_string(body + "\n")
                .with_status_code(status)
                .with_header(header);
            if let Err(e) = req.respond(response) {
                log::warn!("failed to send response: {e}");
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::TermScore;

    struct Echo;
    impl Handler for Echo {
        fn handle(&self, request: Request) -> Response {
            match request {
                Request::Generate { input, .. } => Response::Terms {
                    terms: vec![TermScore { term: input, score: 1.0 }],
                },
                Request::Score { .. } => Response::Scores { scores: vec![] },
            }
        }
    }

    #[test]
    fn lines_in_lines_out() {
        let input = "{\"type\":\"generate\",\"input\":\"x\",\"max_terms\":1}\n\nnot json\n";
        let mut out = Vec::new();
        serve_lines(&Echo, input.as_bytes(), &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], r#"{"type":"terms","terms":[{"term":"x","score":1.0}]}"#);
        assert!(lines[1].starts_with(r#"{"type":"error","message":"#));
    }
}
