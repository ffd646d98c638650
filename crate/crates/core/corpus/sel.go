package main

func sel(x, y chan bool) {
	z := make(chan bool)
	go func() {
		z <- true
	}()
	select {
	case <-x:
	case <-y:
	case <-z:
	}
}

func main() {
	x := make(chan bool)
	y := make(chan bool)
	go sel(x, y)
	go sel(x, y)
	x <- true
	y <- true
}
