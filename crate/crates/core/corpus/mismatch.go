package main

import "fmt"

func Work() {
	for {
		fmt.Println("Working")
	}
}

func Send(ch chan int) {
	ch <- 42
}

func Recv(ch, done chan int) {
	val := <-ch
	done <- val
}

func main() {
	ch := make(chan int)
	done := make(chan int)
	go Send(ch)
	go Recv(ch, done)
	go Recv(ch, done)
	go Work()
	<-done
	<-done
}
