//! Spawns origin and gateway servers on ephemeral loopback ports.
#![allow(dead_code)]

use std::net::TcpListener;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use whtmlgate_core::envelope::SessionKey;
use whtmlgate_core::gateway::{Gateway, GatewayConfig, OriginServer};

pub const HELLO: &str = r#"<whtml><hbody><p>Hello</p></hbody><wcard id="home"><p>Hello</p></wcard></whtml>"#;
pub const HELLO_WML: &str = r#"<wml><card id="home"><p>Hello</p></card></wml>"#;
pub const HELLO_HTML: &str = "<html><body><p>Hello</p></body></html>";

pub fn spawn_origin(root: &Path, key: Option<SessionKey>) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    let origin = Arc::new(OriginServer::new(root, key));
    std::thread::spawn(move || origin.serve(listener, Duration::from_secs(5)));
    addr
}

pub fn spawn_gateway(cfg: GatewayConfig) -> (Arc<Gateway>, String) {
    let gw = Arc::new(Gateway::new(cfg).unwrap());
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    let serving = Arc::clone(&gw);
    std::thread::spawn(move || serving.serve(listener));
    (gw, addr)
}
